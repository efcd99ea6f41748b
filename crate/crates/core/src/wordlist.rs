//! Cognate-coded wordlists in matrix TSV form, and train/test partitions.
//!
//! ```text
//! COGID   German      English  Dutch
//! ASH     a ʃ ɛ       æ ʃ      ɑ s
//! BELLY   b au x      ?        b œi k
//! ```
//!
//! A cell holds space-separated segments, `?` for a reflex to be predicted,
//! or nothing at all for a language without a reflex.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phonology::{self, Segment, MISSING};
use crate::rng::XorShift64Star;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Present(Vec<Segment>),
    Absent,
    ToPredict,
}

impl Cell {
    pub fn is_present(&self) -> bool {
        matches!(self, Cell::Present(_))
    }

    pub fn segments(&self) -> Option<&[Segment]> {
        match self {
            Cell::Present(s) => Some(s),
            _ => None,
        }
    }

    fn parse(text: &str) -> std::result::Result<Self, String> {
        if text == MISSING {
            return Ok(Cell::ToPredict);
        }
        if text.trim().is_empty() {
            return Ok(Cell::Absent);
        }
        let segs = phonology::segments(text).map_err(|e| e.to_string())?;
        if let Some(s) = segs.iter().find(|s| s.is_reserved()) {
            return Err(format!("reserved token {s:?} inside a form"));
        }
        Ok(Cell::Present(segs))
    }

    fn render(&self) -> String {
        match self {
            Cell::Present(segs) => join_segments(segs),
            Cell::Absent => String::new(),
            Cell::ToPredict => MISSING.to_owned(),
        }
    }
}

pub fn join_segments(segs: &[Segment]) -> String {
    segs.iter().map(Segment::as_str).collect::<Vec<_>>().join(" ")
}

/// One cognate set: a reflex slot per language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CognateSet {
    pub cogid: String,
    pub cells: Vec<Cell>,
}

impl CognateSet {
    pub fn present_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_present()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wordlist {
    languages: Vec<String>,
    rows: Vec<CognateSet>,
}

impl Wordlist {
    /// Validates and assembles a wordlist.
    pub fn new(languages: Vec<String>, rows: Vec<CognateSet>) -> Result<Self> {
        let mut seen = HashSet::new();
        for lang in &languages {
            check_identifier(lang, "language")?;
            if !seen.insert(lang.as_str()) {
                return Err(Error::Invalid(format!("duplicate language {lang:?}")));
            }
        }
        let mut ids = HashSet::new();
        for row in &rows {
            check_identifier(&row.cogid, "cogid")?;
            if !ids.insert(row.cogid.as_str()) {
                return Err(Error::Invalid(format!("duplicate cogid {:?}", row.cogid)));
            }
            if row.cells.len() != languages.len() {
                return Err(Error::Invalid(format!(
                    "row {:?} has {} cells for {} languages",
                    row.cogid,
                    row.cells.len(),
                    languages.len()
                )));
            }
            if row.present_count() == 0 {
                return Err(Error::Invalid(format!("row {:?} has no observed forms", row.cogid)));
            }
        }
        Ok(Wordlist { languages, rows })
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn rows(&self) -> &[CognateSet] {
        &self.rows
    }

    pub fn language_index(&self, language: &str) -> Option<usize> {
        self.languages.iter().position(|l| l == language)
    }

    pub fn present_count(&self) -> usize {
        self.rows.iter().map(CognateSet::present_count).sum()
    }
}

fn check_identifier(id: &str, what: &str) -> Result<()> {
    if id.is_empty() {
        return Err(Error::Invalid(format!("empty {what}")));
    }
    if id.contains(['\t', '\n', '\r']) {
        return Err(Error::Invalid(format!("{what} {id:?} contains a tab or newline")));
    }
    Ok(())
}

/// Parses a matrix TSV document.
pub fn parse_wordlist(text: &str) -> Result<Wordlist> {
    let mut lines = text.split('\n').enumerate();
    let (_, header) = lines.next().ok_or(Error::Empty("wordlist header"))?;
    let mut cols = header.split('\t');
    if cols.next() != Some("COGID") {
        return Err(Error::parse(1, "header must start with COGID"));
    }
    let languages: Vec<String> = cols.map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for lang in &languages {
        if lang.is_empty() {
            return Err(Error::parse(1, "empty language name"));
        }
        if !seen.insert(lang) {
            return Err(Error::parse(1, format!("duplicate language {lang:?}")));
        }
    }

    let mut rows = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != languages.len() + 1 {
            return Err(Error::parse(
                line_no,
                format!("expected {} columns, found {}", languages.len() + 1, fields.len()),
            ));
        }
        let cogid = fields[0];
        if cogid.is_empty() {
            return Err(Error::parse(line_no, "empty COGID"));
        }
        if !ids.insert(cogid.to_owned()) {
            return Err(Error::parse(line_no, format!("duplicate COGID {cogid:?}")));
        }
        let cells = fields[1..]
            .iter()
            .map(|f| Cell::parse(f))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|m| Error::parse(line_no, m))?;
        let row = CognateSet {
            cogid: cogid.to_owned(),
            cells,
        };
        if row.present_count() == 0 {
            return Err(Error::parse(
                line_no,
                format!("cognate set {cogid:?} has no observed forms"),
            ));
        }
        rows.push(row);
    }
    Wordlist::new(languages, rows)
}

/// Renders a wordlist as matrix TSV with LF line endings.
pub fn write_wordlist(w: &Wordlist) -> String {
    let mut out = String::from("COGID");
    for lang in &w.languages {
        out.push('\t');
        out.push_str(lang);
    }
    out.push('\n');
    for row in &w.rows {
        out.push_str(&row.cogid);
        for cell in &row.cells {
            out.push('\t');
            out.push_str(&cell.render());
        }
        out.push('\n');
    }
    out
}

/// A form keyed by cognate set and language: a withheld solution or a
/// prediction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Form {
    pub cogid: String,
    pub language: String,
    pub segments: Vec<Segment>,
}

/// Writes `COGID<TAB>LANGUAGE<TAB><value_header>` followed by one line per
/// form.
pub fn write_forms(forms: &[Form], value_header: &str) -> String {
    let mut out = format!("COGID\tLANGUAGE\t{value_header}\n");
    for f in forms {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            f.cogid,
            f.language,
            join_segments(&f.segments)
        ));
    }
    out
}

/// Reads a three-column forms file. The header's third column name is free.
pub fn parse_forms(text: &str) -> Result<Vec<Form>> {
    let mut lines = text.split('\n').enumerate();
    let (_, header) = lines.next().ok_or(Error::Empty("forms header"))?;
    if !header.starts_with("COGID\tLANGUAGE\t") {
        return Err(Error::parse(1, "header must be COGID<TAB>LANGUAGE<TAB>..."));
    }
    let mut forms = Vec::new();
    let mut keys = HashSet::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [cogid, language, value] = fields[..] else {
            return Err(Error::parse(
                line_no,
                format!("expected 3 columns, found {}", fields.len()),
            ));
        };
        if !keys.insert((cogid, language)) {
            return Err(Error::parse(line_no, format!("duplicate entry {cogid}/{language}")));
        }
        let segments = phonology::segments(value).map_err(|e| Error::parse(line_no, e.to_string()))?;
        forms.push(Form {
            cogid: cogid.to_owned(),
            language: language.to_owned(),
            segments,
        });
    }
    Ok(forms)
}

/// Outcome of [`partition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub training: Wordlist,
    pub test: Wordlist,
    /// Withheld forms in wordlist row order, then language order.
    pub solutions: Vec<Form>,
    /// Cells that could not be masked without emptying a row.
    pub shortfall: usize,
}

/// Withholds `floor(proportion × present cells)` forms, chosen uniformly at
/// random under `seed`, while keeping at least one observed form per row.
///
/// Present cells are listed in row-major order, shuffled with
/// [`XorShift64Star`], and taken in shuffled order; a cell is skipped when
/// masking it would leave its row with no observed form. In the test list
/// the withheld cells are `?` and every other unobserved cell is empty, so
/// its queries match the solutions one to one.
pub fn partition(w: &Wordlist, proportion: f64, seed: u64) -> Result<Partition> {
    if !(0.0..=1.0).contains(&proportion) {
        return Err(Error::Invalid(format!("proportion {proportion} outside [0, 1]")));
    }
    let mut cells: Vec<(usize, usize)> = w
        .rows
        .iter()
        .enumerate()
        .flat_map(|(r, row)| {
            row.cells
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_present())
                .map(move |(l, _)| (r, l))
        })
        .collect();
    let target = (proportion * cells.len() as f64).floor() as usize;

    let mut rng = XorShift64Star::new(seed);
    rng.shuffle(&mut cells);

    let mut remaining: Vec<usize> = w.rows.iter().map(CognateSet::present_count).collect();
    let mut masked = vec![vec![false; w.languages.len()]; w.rows.len()];
    let mut taken = 0;
    for (r, l) in cells {
        if taken == target {
            break;
        }
        if remaining[r] > 1 {
            remaining[r] -= 1;
            masked[r][l] = true;
            taken += 1;
        }
    }
    let shortfall = target - taken;
    if shortfall > 0 {
        log::warn!("partition masked {taken} of {target} requested cells");
    }

    let mut training_rows = Vec::with_capacity(w.rows.len());
    let mut test_rows = Vec::new();
    let mut solutions = Vec::new();
    for (r, row) in w.rows.iter().enumerate() {
        let mut train_cells = row.cells.clone();
        let mut test_cells = row.cells.clone();
        let mut any = false;
        for (l, cell) in row.cells.iter().enumerate() {
            if masked[r][l] {
                any = true;
                train_cells[l] = Cell::Absent;
                test_cells[l] = Cell::ToPredict;
                solutions.push(Form {
                    cogid: row.cogid.clone(),
                    language: w.languages[l].clone(),
                    segments: cell.segments().unwrap_or_default().to_vec(),
                });
            } else if matches!(cell, Cell::ToPredict) {
                // Only withheld cells are queries in the test list.
                test_cells[l] = Cell::Absent;
            }
        }
        training_rows.push(CognateSet {
            cogid: row.cogid.clone(),
            cells: train_cells,
        });
        if any {
            test_rows.push(CognateSet {
                cogid: row.cogid.clone(),
                cells: test_cells,
            });
        }
    }
    Ok(Partition {
        training: Wordlist::new(w.languages.clone(), training_rows)?,
        test: Wordlist::new(w.languages.clone(), test_rows)?,
        solutions,
        shortfall,
    })
}
