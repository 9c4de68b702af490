//! MPS reader (fixed and free format) and a canonical free-format writer.
//!
//! Integer variables are those between `'INTORG'` and `'INTEND'` markers.
//! An integer variable with no upper bound entry gets the classical `[0, 1]`
//! default. Ranged rows are split into two one-sided rows, the second named
//! `<row>_rng`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

use crate::model::{MipBuilder, MipInstance, ModelError, ObjSense, RowSense, VarKind};

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Objective,
    Constraint(RowSense),
}

struct Column {
    name: String,
    integer: bool,
    obj: f64,
    entries: Vec<(usize, f64)>,
    lower: Option<f64>,
    upper: Option<f64>,
}

struct Reader {
    line: usize,
    section: Section,
    fixed: bool,
    name: String,
    sense: ObjSense,
    objective_name: Option<String>,
    row_names: Vec<String>,
    row_sense: Vec<RowSense>,
    row_index: HashMap<String, RowKind>,
    row_pos: HashMap<String, usize>,
    rhs: Vec<f64>,
    ranges: Vec<Option<f64>>,
    obj_rhs: f64,
    columns: Vec<Column>,
    col_index: HashMap<String, usize>,
    in_int: bool,
}

fn fixed_fields(line: &str) -> Vec<String> {
    const SPANS: [(usize, usize); 6] = [(1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61)];
    let chars: Vec<char> = line.chars().collect();
    SPANS
        .iter()
        .map(|&(s, e)| {
            let s = s.min(chars.len());
            let e = e.min(chars.len());
            chars[s..e].iter().collect::<String>().trim().to_string()
        })
        .filter(|f| !f.is_empty())
        .collect()
}

impl Reader {
    fn err(&self, msg: impl Into<String>) -> MpsError {
        MpsError::Syntax {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn number(&self, tok: &str) -> Result<f64, MpsError> {
        let v: f64 = tok
            .parse()
            .map_err(|_| self.err(format!("malformed number `{tok}`")))?;
        if v.is_nan() {
            return Err(self.err(format!("malformed number `{tok}`")));
        }
        Ok(v)
    }

    fn header(&mut self, raw: &str) -> Result<(), MpsError> {
        let mut toks = raw.split_whitespace();
        let head = toks.next().unwrap_or("");
        self.section = match head {
            "NAME" => {
                self.name = toks.collect::<Vec<_>>().join(" ");
                Section::Name
            }
            "OBJSENSE" => {
                if let Some(s) = toks.next() {
                    self.objsense(s)?;
                }
                Section::ObjSense
            }
            "ROWS" => Section::Rows,
            "COLUMNS" => Section::Columns,
            "RHS" => Section::Rhs,
            "RANGES" => Section::Ranges,
            "BOUNDS" => Section::Bounds,
            "ENDATA" => Section::End,
            other => return Err(self.err(format!("unknown section `{other}`"))),
        };
        Ok(())
    }

    fn objsense(&mut self, tok: &str) -> Result<(), MpsError> {
        self.sense = match tok {
            "MAX" | "MAXIMIZE" => ObjSense::Maximize,
            "MIN" | "MINIMIZE" => ObjSense::Minimize,
            other => return Err(self.err(format!("unknown objective sense `{other}`"))),
        };
        Ok(())
    }

    fn tokens(&self, raw: &str) -> Vec<String> {
        if self.fixed {
            fixed_fields(raw)
        } else {
            raw.split_whitespace().map(str::to_string).collect()
        }
    }

    fn data(&mut self, raw: &str) -> Result<(), MpsError> {
        match self.section {
            Section::Name => Err(self.err("data line before ROWS")),
            Section::ObjSense => {
                let t = raw.trim().to_string();
                self.objsense(&t)
            }
            Section::Rows => self.row(raw),
            Section::Columns => self.column(raw),
            Section::Rhs => self.rhs_line(raw),
            Section::Ranges => self.range_line(raw),
            Section::Bounds => self.bound_line(raw),
            Section::End => Err(self.err("data after ENDATA")),
        }
    }

    fn row(&mut self, raw: &str) -> Result<(), MpsError> {
        if !self.fixed && raw.split_whitespace().count() > 2 {
            // names with embedded blanks only exist in fixed format
            self.fixed = true;
        }
        let t = self.tokens(raw);
        if t.len() != 2 {
            return Err(self.err("ROWS entry needs a type and a name"));
        }
        let kind = match t[0].as_str() {
            "N" => RowKind::Objective,
            "L" => RowKind::Constraint(RowSense::Le),
            "G" => RowKind::Constraint(RowSense::Ge),
            "E" => RowKind::Constraint(RowSense::Eq),
            other => return Err(self.err(format!("unknown row type `{other}`"))),
        };
        if self.row_index.contains_key(&t[1]) {
            return Err(self.err(format!("duplicate row `{}`", t[1])));
        }
        match kind {
            RowKind::Objective => {
                if self.objective_name.is_some() {
                    return Err(self.err("more than one objective (N) row"));
                }
                self.objective_name = Some(t[1].clone());
            }
            RowKind::Constraint(sense) => {
                self.row_pos.insert(t[1].clone(), self.row_names.len());
                self.row_names.push(t[1].clone());
                self.row_sense.push(sense);
                self.rhs.push(0.0);
                self.ranges.push(None);
            }
        }
        self.row_index.insert(t[1].clone(), kind);
        Ok(())
    }

    fn column(&mut self, raw: &str) -> Result<(), MpsError> {
        if raw.contains("'MARKER'") {
            let t: Vec<&str> = raw.split_whitespace().collect();
            match t.get(2).copied() {
                Some("'INTORG'") if !self.in_int => self.in_int = true,
                Some("'INTEND'") if self.in_int => self.in_int = false,
                Some("'INTORG'") => return Err(self.err("nested INTORG marker")),
                Some("'INTEND'") => return Err(self.err("INTEND without INTORG")),
                _ => return Err(self.err("unknown MARKER line")),
            }
            return Ok(());
        }
        let t = self.tokens(raw);
        if t.len() < 3 || t.len().is_multiple_of(2) {
            return Err(self.err("COLUMNS entry needs a column and row/value pairs"));
        }
        let col = match self.col_index.get(&t[0]) {
            Some(&c) => c,
            None => {
                self.columns.push(Column {
                    name: t[0].clone(),
                    integer: self.in_int,
                    obj: 0.0,
                    entries: Vec::new(),
                    lower: None,
                    upper: None,
                });
                self.col_index.insert(t[0].clone(), self.columns.len() - 1);
                self.columns.len() - 1
            }
        };
        for pair in t[1..].chunks(2) {
            let v = self.number(&pair[1])?;
            match self.row_index.get(&pair[0]) {
                Some(RowKind::Objective) => self.columns[col].obj += v,
                Some(RowKind::Constraint(_)) => {
                    let r = self.row_pos[&pair[0]];
                    self.columns[col].entries.push((r, v));
                }
                None => return Err(self.err(format!("undeclared row `{}`", pair[0]))),
            }
        }
        Ok(())
    }

    /// Splits an optional leading set name from row/value pairs.
    fn pairs<'t>(&self, t: &'t [String]) -> Result<&'t [String], MpsError> {
        let body = if t.len() % 2 == 1 { &t[1..] } else { t };
        if body.is_empty() {
            return Err(self.err("expected row/value pairs"));
        }
        Ok(body)
    }

    fn rhs_line(&mut self, raw: &str) -> Result<(), MpsError> {
        let t = self.tokens(raw);
        let body = self.pairs(&t)?.to_vec();
        for pair in body.chunks(2) {
            let v = self.number(&pair[1])?;
            match self.row_index.get(&pair[0]) {
                Some(RowKind::Objective) => self.obj_rhs = v,
                Some(RowKind::Constraint(_)) => {
                    let r = self.row_pos[&pair[0]];
                    self.rhs[r] = v;
                }
                None => return Err(self.err(format!("undeclared row `{}`", pair[0]))),
            }
        }
        Ok(())
    }

    fn range_line(&mut self, raw: &str) -> Result<(), MpsError> {
        let t = self.tokens(raw);
        let body = self.pairs(&t)?.to_vec();
        for pair in body.chunks(2) {
            let v = self.number(&pair[1])?;
            match self.row_index.get(&pair[0]) {
                Some(RowKind::Constraint(_)) => {
                    let r = self.row_pos[&pair[0]];
                    self.ranges[r] = Some(v);
                }
                Some(RowKind::Objective) => return Err(self.err("RANGES on the objective row")),
                None => return Err(self.err(format!("undeclared row `{}`", pair[0]))),
            }
        }
        Ok(())
    }

    fn bound_line(&mut self, raw: &str) -> Result<(), MpsError> {
        let t = self.tokens(raw);
        if t.len() < 2 {
            return Err(self.err("BOUNDS entry too short"));
        }
        let kind = t[0].as_str();
        let needs_value = matches!(kind, "UP" | "LO" | "FX" | "UI" | "LI");
        let known = |s: &str| self.col_index.contains_key(s);
        let (col_tok, val_tok) = match (t.len(), needs_value) {
            (4, _) => (&t[2], Some(&t[3])),
            (3, true) => (&t[1], Some(&t[2])),
            (3, false) if known(&t[1]) && t[2].parse::<f64>().is_ok() => (&t[1], Some(&t[2])),
            (3, false) => (&t[2], None),
            (2, false) => (&t[1], None),
            _ => return Err(self.err("malformed BOUNDS entry")),
        };
        let col = *self
            .col_index
            .get(col_tok)
            .ok_or_else(|| self.err(format!("undeclared column `{col_tok}`")))?;
        let value = match val_tok {
            Some(v) => Some(self.number(v)?),
            None => None,
        };
        let c = &mut self.columns[col];
        match kind {
            "UP" => {
                let v = value.unwrap();
                if v < 0.0 && c.lower.is_none() {
                    c.lower = Some(f64::NEG_INFINITY);
                }
                c.upper = Some(v);
            }
            "LO" => c.lower = value,
            "FX" => {
                c.lower = value;
                c.upper = value;
            }
            "UI" => {
                c.integer = true;
                c.upper = value;
            }
            "LI" => {
                c.integer = true;
                c.lower = value;
            }
            "BV" => {
                c.integer = true;
                c.lower = Some(0.0);
                c.upper = Some(1.0);
            }
            "MI" => c.lower = Some(f64::NEG_INFINITY),
            "PL" => c.upper = Some(f64::INFINITY),
            "FR" => {
                c.lower = Some(f64::NEG_INFINITY);
                c.upper = Some(f64::INFINITY);
            }
            other => return Err(self.err(format!("unsupported bound type `{other}`"))),
        }
        Ok(())
    }

    fn finish(self) -> Result<MipInstance, MpsError> {
        if self.in_int {
            return Err(self.err("INTORG marker without matching INTEND"));
        }
        if self.section != Section::End {
            return Err(self.err("missing ENDATA"));
        }
        let objective_name = self
            .objective_name
            .clone()
            .ok_or_else(|| self.err("no objective (N) row"))?;
        let mut b = MipBuilder::new(self.name.clone())
            .sense(self.sense)
            .objective_name(objective_name)
            .objective_offset(-self.obj_rhs);
        for c in &self.columns {
            let kind = if c.integer {
                VarKind::Integer
            } else {
                VarKind::Continuous
            };
            let lower = c.lower.unwrap_or(0.0);
            let upper = match (c.upper, c.integer) {
                (Some(u), _) => u,
                (None, true) => 1.0,
                (None, false) => f64::INFINITY,
            };
            b.add_named_var(c.name.clone(), kind, lower, upper, c.obj);
        }
        let mut row_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.row_names.len()];
        for (j, c) in self.columns.iter().enumerate() {
            for &(r, v) in &c.entries {
                row_entries[r].push((j, v));
            }
        }
        let mut extra = Vec::new();
        for (r, entries) in row_entries.iter().enumerate() {
            let (sense, rhs) = (self.row_sense[r], self.rhs[r]);
            let name = &self.row_names[r];
            match self.ranges[r] {
                None => {
                    b.add_named_row(name.clone(), entries, sense, rhs);
                }
                Some(range) => {
                    let (lo, hi) = match sense {
                        RowSense::Le => (rhs - range.abs(), rhs),
                        RowSense::Ge => (rhs, rhs + range.abs()),
                        RowSense::Eq if range >= 0.0 => (rhs, rhs + range),
                        RowSense::Eq => (rhs + range, rhs),
                    };
                    let (first, second) = match sense {
                        RowSense::Le => ((RowSense::Le, hi), (RowSense::Ge, lo)),
                        RowSense::Ge => ((RowSense::Ge, lo), (RowSense::Le, hi)),
                        RowSense::Eq if range >= 0.0 => ((RowSense::Ge, lo), (RowSense::Le, hi)),
                        RowSense::Eq => ((RowSense::Le, hi), (RowSense::Ge, lo)),
                    };
                    b.add_named_row(name.clone(), entries, first.0, first.1);
                    extra.push((format!("{name}_rng"), entries.clone(), second.0, second.1));
                }
            }
        }
        for (name, entries, sense, rhs) in extra {
            b.add_named_row(name, &entries, sense, rhs);
        }
        Ok(b.build()?)
    }
}

/// Parses an MPS document.
pub fn parse_mps<R: BufRead>(input: R) -> Result<MipInstance, MpsError> {
    let mut rd = Reader {
        line: 0,
        section: Section::Name,
        fixed: false,
        name: String::new(),
        sense: ObjSense::Minimize,
        objective_name: None,
        row_names: Vec::new(),
        row_sense: Vec::new(),
        row_index: HashMap::new(),
        row_pos: HashMap::new(),
        rhs: Vec::new(),
        ranges: Vec::new(),
        obj_rhs: 0.0,
        columns: Vec::new(),
        col_index: HashMap::new(),
        in_int: false,
    };
    let mut seen_name = false;
    for line in input.lines() {
        let line = line?;
        rd.line += 1;
        let raw = line.trim_end();
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            rd.header(raw)?;
            seen_name |= rd.section == Section::Name;
            if rd.section == Section::End {
                break;
            }
        } else {
            if !seen_name && rd.section == Section::Name {
                return Err(rd.err("expected NAME section"));
            }
            rd.data(raw)?;
        }
    }
    rd.finish()
}

pub fn parse_mps_str(text: &str) -> Result<MipInstance, MpsError> {
    parse_mps(text.as_bytes())
}

/// Canonical free-format dump: rows and columns in model order, every column
/// carrying an explicit objective entry, and explicit lower and upper bounds
/// for every variable.
pub fn dump_canonical(inst: &MipInstance) -> String {
    let mut out = String::new();
    let name = if inst.name().is_empty() { "UNNAMED" } else { inst.name() };
    let _ = writeln!(out, "NAME {name}");
    if inst.sense() == ObjSense::Maximize {
        let _ = writeln!(out, "OBJSENSE\n    MAX");
    }
    let sign = match inst.sense() {
        ObjSense::Minimize => 1.0,
        ObjSense::Maximize => -1.0,
    };
    let _ = writeln!(out, "ROWS\n N  {}", inst.objective_name());
    for (i, r) in inst.row_names().iter().enumerate() {
        let _ = writeln!(out, " {}  {}", inst.row_sense()[i], r);
    }
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inst.num_vars()];
    for i in 0..inst.num_rows() {
        for (c, v) in inst.rows().row(i) {
            by_col[c].push((i, v));
        }
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    for j in 0..inst.num_vars() {
        if inst.is_integer(j) != in_int {
            let tag = if in_int { "INTEND" } else { "INTORG" };
            let _ = writeln!(out, "    MARKER    'MARKER'    '{tag}'");
            in_int = !in_int;
        }
        let col = &inst.var_names()[j];
        let _ = writeln!(
            out,
            "    {}  {}  {}",
            col,
            inst.objective_name(),
            fmt_num(sign * inst.objective()[j])
        );
        for &(i, v) in &by_col[j] {
            let _ = writeln!(out, "    {}  {}  {}", col, inst.row_names()[i], fmt_num(v));
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER    'MARKER'    'INTEND'");
    }
    let _ = writeln!(out, "RHS");
    let offset = sign * inst.objective_offset();
    if offset != 0.0 {
        let _ = writeln!(out, "    RHS  {}  {}", inst.objective_name(), fmt_num(-offset));
    }
    for (i, r) in inst.row_names().iter().enumerate() {
        if inst.rhs()[i] != 0.0 {
            let _ = writeln!(out, "    RHS  {}  {}", r, fmt_num(inst.rhs()[i]));
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for j in 0..inst.num_vars() {
        let col = &inst.var_names()[j];
        let (lo, hi) = (inst.lower()[j], inst.upper()[j]);
        if lo == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI BND  {col}");
        } else {
            let _ = writeln!(out, " LO BND  {col}  {}", fmt_num(lo));
        }
        if hi == f64::INFINITY {
            let _ = writeln!(out, " PL BND  {col}");
        } else {
            let _ = writeln!(out, " UP BND  {col}  {}", fmt_num(hi));
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

fn fmt_num(v: f64) -> String {
    // shortest representation that parses back to the same bits
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:?}")
}
