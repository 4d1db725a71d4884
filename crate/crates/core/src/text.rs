//! Line-oriented text formats: system documents, shift scripts and cost
//! models.
//!
//! System documents use one directive per line and `#` comments:
//!
//! ```text
//! system demo
//! register x 4
//! feedback x[3] = x[0] + x[2]*x[1]
//! output O = x[0] + x[3]
//! inject init x[3] = O
//! param init_cycles = 8
//! ```
//!
//! In expressions `+` is XOR and `*` is AND. A factor is a register bit
//! `id[i]`, a literal `0`/`1`, or the bare name of another output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::anf::{AnfExpr, ProductTerm, RegId, Var};
use crate::error::{ParseError, SpecError};
use crate::fsr::{Injection, RegisterSpec, SystemSpec};
use crate::galois::{ShiftMove, ShiftScript};
use crate::timing::CostModel;

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

enum Term {
    Zero,
    One,
    Product(ProductTerm),
}

/// Cursor over one line; columns are 1-based and reported in errors.
struct Cursor<'a> {
    line: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: usize, text: &'a str, pos: usize) -> Self {
        Cursor { line, text, pos }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.pos + 1, msg)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if is_ident_start(c) => {}
            _ => return Err(self.err("expected identifier")),
        }
        while let Some(c) = self.peek() {
            if !is_ident(c) {
                break;
            }
            self.pos += 1;
        }
        Ok(&self.text[start..self.pos])
    }

    fn int<T: std::str::FromStr>(&mut self) -> Result<T, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some('-') {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s = &self.text[start..self.pos];
        s.parse().map_err(|_| {
            ParseError::new(self.line, start + 1, format!("expected integer, found {s:?}"))
        })
    }

    fn float(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || ".eE+-".contains(c)) {
            self.pos += 1;
        }
        let s = &self.text[start..self.pos];
        s.parse()
            .map_err(|_| ParseError::new(self.line, start + 1, format!("expected number, found {s:?}")))
    }

    /// `id[index]`
    fn bit_ref(&mut self) -> Result<(RegId, usize), ParseError> {
        let id = self.ident()?;
        self.expect("[")?;
        let idx = self.int()?;
        self.expect("]")?;
        Ok((RegId::new(id), idx))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut vars = Vec::new();
        let mut zero = false;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('0') => {
                    self.pos += 1;
                    zero = true;
                }
                Some('1') => {
                    self.pos += 1;
                }
                Some(c) if is_ident_start(c) => {
                    let name = self.ident()?;
                    if self.eat("[") {
                        let idx = self.int()?;
                        self.expect("]")?;
                        vars.push(Var::bit(name, idx));
                    } else {
                        vars.push(Var::output(name));
                    }
                }
                _ => return Err(self.err("expected factor")),
            }
            if !self.eat("*") {
                break;
            }
        }
        Ok(match ProductTerm::new(vars) {
            _ if zero => Term::Zero,
            None => Term::One,
            Some(t) => Term::Product(t),
        })
    }

    fn expr(&mut self) -> Result<AnfExpr, ParseError> {
        let mut e = AnfExpr::zero();
        loop {
            match self.term()? {
                Term::One => e.set_constant(!e.constant_bit()),
                Term::Zero => {}
                Term::Product(t) => e.toggle(t),
            }
            if !self.eat("+") {
                break;
            }
        }
        Ok(e)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parses a standalone expression such as `b[0] + b[3]*b[67]`.
pub fn parse_expr(text: &str) -> Result<AnfExpr, ParseError> {
    let mut c = Cursor::new(1, text, 0);
    let e = c.expr()?;
    if !c.at_end() {
        return Err(c.err("unexpected trailing input"));
    }
    Ok(e)
}

/// Parsed system plus the line each item came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecDocument {
    pub spec: SystemSpec,
    pub system_line: usize,
    pub register_lines: BTreeMap<RegId, usize>,
    pub feedback_lines: BTreeMap<(RegId, usize), usize>,
    pub output_lines: BTreeMap<String, usize>,
}

pub fn parse_spec(text: &str) -> Result<SpecDocument, ParseError> {
    let mut name: Option<(String, usize)> = None;
    let mut registers: Vec<(RegId, usize, usize, usize)> = Vec::new(); // id, len, line, col
    let mut feedback: Vec<(RegId, usize, AnfExpr, usize, usize)> = Vec::new();
    let mut outputs: Vec<(String, AnfExpr, usize, usize)> = Vec::new();
    let mut injections: Vec<(Injection, usize, usize)> = Vec::new();
    let mut params = BTreeMap::new();

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let body = strip_comment(raw);
        let mut c = Cursor::new(ln, body, 0);
        if c.at_end() {
            continue;
        }
        let start = c.pos;
        let directive = c.ident()?;
        let col = c.pos + 1;
        match directive {
            "system" => {
                if name.is_some() {
                    return Err(ParseError::new(ln, start + 1, "second `system` directive"));
                }
                name = Some((c.ident()?.to_owned(), ln));
            }
            "register" => {
                let id = RegId::new(c.ident()?);
                let col = c.pos + 2;
                let len = c.int()?;
                registers.push((id, len, ln, col));
            }
            "feedback" => {
                let (id, bit) = c.bit_ref()?;
                c.expect("=")?;
                let ecol = c.pos + 2;
                feedback.push((id, bit, c.expr()?, ln, ecol));
            }
            "output" => {
                let n = c.ident()?.to_owned();
                c.expect("=")?;
                let ecol = c.pos + 2;
                outputs.push((n, c.expr()?, ln, ecol));
            }
            "inject" => {
                let mode = c.ident()?.to_owned();
                let (register, bit) = c.bit_ref()?;
                c.expect("=")?;
                let output = c.ident()?.to_owned();
                injections.push((
                    Injection {
                        mode,
                        register,
                        bit,
                        output,
                    },
                    ln,
                    col,
                ));
            }
            "param" => {
                let key = c.ident()?.to_owned();
                c.expect("=")?;
                let v: i64 = c.int()?;
                params.insert(key, v);
            }
            other => {
                return Err(ParseError::new(
                    ln,
                    start + 1,
                    format!("unknown directive `{other}`"),
                ))
            }
        }
        if !c.at_end() {
            return Err(c.err("unexpected trailing input"));
        }
    }

    let (name, system_line) = name.ok_or_else(|| ParseError::new(1, 1, "no system declared"))?;

    // semantic checks, each tied to its line
    let mut lengths: BTreeMap<RegId, usize> = BTreeMap::new();
    let mut register_lines = BTreeMap::new();
    for (id, len, ln, col) in &registers {
        if *len == 0 {
            return Err(ParseError::new(*ln, *col, format!("register {id} has zero length")));
        }
        if lengths.insert(id.clone(), *len).is_some() {
            return Err(ParseError::new(*ln, 1, format!("register {id} declared twice")));
        }
        register_lines.insert(id.clone(), *ln);
    }
    let output_names: BTreeSet<&str> = outputs.iter().map(|(n, ..)| n.as_str()).collect();
    let check_expr = |e: &AnfExpr, ln: usize, col: usize, allow_outputs: bool| {
        for v in e.support() {
            match v {
                Var::Bit { reg, index } => match lengths.get(&reg) {
                    None => {
                        return Err(ParseError::new(ln, col, format!("undeclared register {reg}")))
                    }
                    Some(&n) if index >= n => {
                        return Err(ParseError::new(
                            ln,
                            col,
                            format!("index out of range: {reg}[{index}] in a {n}-bit register"),
                        ))
                    }
                    _ => {}
                },
                Var::Output(o) => {
                    if !allow_outputs {
                        return Err(ParseError::new(ln, col, format!("feedback cannot read output {o}")));
                    }
                    if !output_names.contains(o.as_str()) {
                        return Err(ParseError::new(ln, col, format!("undeclared output {o}")));
                    }
                }
            }
        }
        Ok(())
    };
    let check_target = |id: &RegId, bit: usize, ln: usize| match lengths.get(id) {
        None => Err(ParseError::new(ln, 1, format!("undeclared register {id}"))),
        Some(&n) if bit >= n => Err(ParseError::new(
            ln,
            1,
            format!("index out of range: {id}[{bit}] in a {n}-bit register"),
        )),
        _ => Ok(()),
    };

    let mut regs: Vec<RegisterSpec> = registers
        .iter()
        .map(|(id, len, ..)| RegisterSpec::new(id.clone(), *len))
        .collect();
    let mut feedback_lines = BTreeMap::new();
    for (id, bit, e, ln, col) in feedback {
        check_target(&id, bit, ln)?;
        check_expr(&e, ln, col, false)?;
        if feedback_lines.insert((id.clone(), bit), ln).is_some() {
            return Err(ParseError::new(ln, 1, format!("feedback for {id}[{bit}] given twice")));
        }
        let r = regs.iter_mut().find(|r| r.id() == &id).expect("checked");
        r.set_feedback(bit, e)
            .map_err(|e| ParseError::new(ln, 1, e.to_string()))?;
    }
    let mut output_lines = BTreeMap::new();
    for (n, e, ln, col) in &outputs {
        check_expr(e, *ln, *col, true)?;
        if output_lines.insert(n.clone(), *ln).is_some() {
            return Err(ParseError::new(*ln, 1, format!("output {n} declared twice")));
        }
    }
    for (inj, ln, _) in &injections {
        check_target(&inj.register, inj.bit, *ln)?;
        if !output_names.contains(inj.output.as_str()) {
            return Err(ParseError::new(*ln, 1, format!("undeclared output {}", inj.output)));
        }
    }

    let spec = SystemSpec::new(
        name,
        regs,
        outputs.into_iter().map(|(n, e, ..)| (n, e)).collect(),
        injections.into_iter().map(|(i, ..)| i).collect(),
        params,
    )
    .map_err(|e| {
        let line = match &e {
            SpecError::OutputCycle(o) => output_lines.get(o).copied().unwrap_or(system_line),
            _ => system_line,
        };
        ParseError::new(line, 1, e.to_string())
    })?;
    Ok(SpecDocument {
        spec,
        system_line,
        register_lines,
        feedback_lines,
        output_lines,
    })
}

/// Canonical text of a system. Pure shift bits are omitted; explicit
/// feedback is listed per register from the highest bit down.
pub fn format_spec(spec: &SystemSpec) -> String {
    let mut out = String::new();
    writeln!(out, "system {}", spec.name()).unwrap();
    for r in spec.registers() {
        writeln!(out, "register {} {}", r.id(), r.len()).unwrap();
    }
    for r in spec.registers() {
        for (bit, f) in r.explicit().iter().rev() {
            writeln!(out, "feedback {}[{}] = {}", r.id(), bit, f).unwrap();
        }
    }
    for (n, e) in spec.outputs() {
        writeln!(out, "output {n} = {e}").unwrap();
    }
    for inj in spec.injections() {
        writeln!(
            out,
            "inject {} {}[{}] = {}",
            inj.mode, inj.register, inj.bit, inj.output
        )
        .unwrap();
    }
    for (k, v) in spec.params() {
        writeln!(out, "param {k} = {v}").unwrap();
    }
    out
}

/// Parses `shift <reg> <src> -> <dst> : <term>, <term>, ...` lines.
pub fn parse_script(text: &str) -> Result<ShiftScript, ParseError> {
    let mut moves = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let mut c = Cursor::new(ln, strip_comment(raw), 0);
        if c.at_end() {
            continue;
        }
        let kw = c.ident()?;
        if kw != "shift" {
            return Err(ParseError::new(ln, 1, format!("unknown directive `{kw}`")));
        }
        let register = RegId::new(c.ident()?);
        let source = c.int()?;
        c.expect("->")?;
        let destination = c.int()?;
        c.expect(":")?;
        let mut terms = BTreeSet::new();
        loop {
            let col = c.pos + 1;
            match c.term()? {
                Term::Product(t) if !t.vars().iter().any(|v| matches!(v, Var::Output(_))) => {
                    terms.insert(t);
                }
                _ => return Err(ParseError::new(ln, col, "shift terms must be register bits")),
            }
            if !c.eat(",") {
                break;
            }
        }
        if !c.at_end() {
            return Err(c.err("unexpected trailing input"));
        }
        moves.push(ShiftMove {
            register,
            source,
            destination,
            terms,
        });
    }
    Ok(ShiftScript { moves })
}

pub fn format_script(script: &ShiftScript) -> String {
    let mut out = String::new();
    for m in &script.moves {
        let terms: Vec<String> = m.terms.iter().map(ToString::to_string).collect();
        writeln!(
            out,
            "shift {} {} -> {} : {}",
            m.register,
            m.source,
            m.destination,
            terms.join(", ")
        )
        .unwrap();
    }
    out
}

/// Reads `weight xor2 = <float>` / `weight and2 = <float>` lines on top of
/// the default model.
pub fn parse_cost_model(text: &str) -> Result<CostModel, ParseError> {
    let mut model = CostModel::default();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let mut c = Cursor::new(ln, strip_comment(raw), 0);
        if c.at_end() {
            continue;
        }
        let kw = c.ident()?;
        if kw != "weight" {
            return Err(ParseError::new(ln, 1, format!("unknown directive `{kw}`")));
        }
        let gcol = c.pos + 2;
        let gate = c.ident()?;
        c.expect("=")?;
        let vcol = c.pos + 2;
        let w = c.float()?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(ParseError::new(ln, vcol, "weights must be positive"));
        }
        match gate {
            "xor2" => model.xor2_weight = w,
            "and2" => model.and2_weight = w,
            other => return Err(ParseError::new(ln, gcol, format!("unknown gate `{other}`"))),
        }
        if !c.at_end() {
            return Err(c.err("unexpected trailing input"));
        }
    }
    Ok(model)
}
