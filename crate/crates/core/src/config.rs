//! Line-oriented run configuration.
//!
//! ```text
//! command = solve
//!
//! [problem]
//! domain = interval(1.0, 64, gamma1=right)
//! c0 = 1.0
//! gamma = linear(2.0)
//! beta = physical(h=1.0, s=1.0)
//! g = 0
//! h = beta_of(1.0)
//! u0 = 1.0
//! final_time = 1.0
//!
//! [solver]
//! tau = 0.05
//! lambda_schedule = [0.5, 0.25, 0.125]
//! ```
//!
//! Sections: `[problem]`, `[solver]`, `[perturbation]` (field overrides for the
//! second run of a dependence study), `[convergence]` and `[graph-check]`.
//! Numbers accept `pi` and products or quotients such as `pi/2`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graphs::{builtin_graphs, ScalarGraph};
use crate::mesh::{GammaOneSide, Mesh, MeshPreset};
use crate::problem::{ProblemSpec, SolverConfig, SolverKind, SpaceTimeField};
use crate::verification::{ConvergenceSetup, CosineMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

fn invalid(message: impl Into<String>) -> ConfigError {
    ConfigError::Validation(message.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GraphCheck,
    Solve,
    Continuation,
    Convergence,
    Dependence,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::GraphCheck,
        Command::Solve,
        Command::Continuation,
        Command::Convergence,
        Command::Dependence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::GraphCheck => "graph-check",
            Command::Solve => "solve",
            Command::Continuation => "continuation",
            Command::Convergence => "convergence",
            Command::Dependence => "dependence",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown command '{s}'")))
    }
}

// ---------------------------------------------------------------------------
// syntax

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(f64),
    Ident(String),
    Call(String, Vec<Arg>),
    List(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq)]
struct Arg {
    key: Option<String>,
    value: Value,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Ident(s) => f.write_str(s),
            Value::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    if let Some(k) = &a.key {
                        write!(f, "{k}=")?;
                    }
                    write!(f, "{}", a.value)?;
                }
                f.write_str(")")
            }
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Open,
    Close,
    OpenBracket,
    CloseBracket,
    Comma,
    Equals,
    Star,
    Slash,
    Minus,
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Token>, ConfigError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '+' => i += 1,
            '(' | ')' | '[' | ']' | ',' | '=' | '*' | '/' | '-' => {
                out.push(match c {
                    '(' => Token::Open,
                    ')' => Token::Close,
                    '[' => Token::OpenBracket,
                    ']' => Token::CloseBracket,
                    ',' => Token::Comma,
                    '=' => Token::Equals,
                    '*' => Token::Star,
                    '/' => Token::Slash,
                    _ => Token::Minus,
                });
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let x = s.parse::<f64>().map_err(|_| parse_err(line, format!("bad number '{s}'")))?;
                out.push(Token::Num(x));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '-') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(parse_err(line, format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<(), ConfigError> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => Err(parse_err(self.line, format!("expected {what}"))),
        }
    }

    fn value(&mut self) -> Result<Value, ConfigError> {
        let mut v = self.unary()?;
        while let Some(op @ (Token::Star | Token::Slash)) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            let (Value::Num(a), Value::Num(b)) = (&v, &rhs) else {
                return Err(parse_err(self.line, "arithmetic needs numbers"));
            };
            v = Value::Num(if op == Token::Star { a * b } else { a / b });
        }
        Ok(v)
    }

    fn unary(&mut self) -> Result<Value, ConfigError> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            return match self.unary()? {
                Value::Num(x) => Ok(Value::Num(-x)),
                _ => Err(parse_err(self.line, "'-' needs a number")),
            };
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Value, ConfigError> {
        match self.next() {
            Some(Token::Num(x)) => Ok(Value::Num(x)),
            Some(Token::Ident(name)) => {
                if self.peek() == Some(&Token::Open) {
                    self.pos += 1;
                    let args = self.args()?;
                    Ok(Value::Call(name, args))
                } else if name == "pi" {
                    Ok(Value::Num(std::f64::consts::PI))
                } else {
                    Ok(Value::Ident(name))
                }
            }
            Some(Token::OpenBracket) => {
                let mut items = Vec::new();
                if self.peek() == Some(&Token::CloseBracket) {
                    self.pos += 1;
                    return Ok(Value::List(items));
                }
                loop {
                    items.push(self.value()?);
                    match self.next() {
                        Some(Token::Comma) => continue,
                        Some(Token::CloseBracket) => break,
                        _ => return Err(parse_err(self.line, "expected ',' or ']'")),
                    }
                }
                Ok(Value::List(items))
            }
            Some(Token::Open) => {
                let v = self.value()?;
                self.expect(Token::Close, "')'")?;
                Ok(v)
            }
            _ => Err(parse_err(self.line, "expected a value")),
        }
    }

    fn args(&mut self) -> Result<Vec<Arg>, ConfigError> {
        let mut args = Vec::new();
        if self.peek() == Some(&Token::Close) {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            let key = match (self.tokens.get(self.pos), self.tokens.get(self.pos + 1)) {
                (Some(Token::Ident(k)), Some(Token::Equals)) => {
                    let k = k.clone();
                    self.pos += 2;
                    Some(k)
                }
                _ => None,
            };
            let value = self.value()?;
            args.push(Arg { key, value });
            match self.next() {
                Some(Token::Comma) => continue,
                Some(Token::Close) => break,
                _ => return Err(parse_err(self.line, "expected ',' or ')'")),
            }
        }
        Ok(args)
    }
}

fn parse_value(text: &str, line: usize) -> Result<Value, ConfigError> {
    let tokens = tokenize(text, line)?;
    if tokens.is_empty() {
        return Err(parse_err(line, "missing value"));
    }
    let mut p = Parser { tokens, pos: 0, line };
    let v = p.value()?;
    if p.pos != p.tokens.len() {
        return Err(parse_err(line, "trailing input after value"));
    }
    Ok(v)
}

const SECTIONS: [&str; 6] = ["", "problem", "solver", "perturbation", "convergence", "graph-check"];

#[derive(Debug, Default)]
struct Section {
    entries: BTreeMap<String, (Value, usize)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(Value, usize)> {
        self.entries.remove(key)
    }

    fn leftovers(self, section: &str, strict: bool, warnings: &mut Vec<String>) -> Result<(), ConfigError> {
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            let msg = format!("unknown key '{key}' in [{section}]");
            if strict {
                return Err(parse_err(line, msg));
            }
            warnings.push(format!("line {line}: {msg} (ignored)"));
        }
        Ok(())
    }
}

fn split_sections(text: &str, strict: bool, warnings: &mut Vec<String>) -> Result<BTreeMap<String, (Section, usize)>, ConfigError> {
    let mut sections: BTreeMap<String, (Section, usize)> = BTreeMap::new();
    sections.insert(String::new(), (Section::default(), 0));
    let mut current = String::new();
    let mut skipping = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "unterminated section header"))?
                .trim()
                .to_string();
            if name.is_empty() || !SECTIONS.contains(&name.as_str()) {
                if strict {
                    return Err(parse_err(line, format!("unknown section [{name}]")));
                }
                warnings.push(format!("line {line}: unknown section [{name}] (ignored)"));
                skipping = true;
                continue;
            }
            if sections.contains_key(&name) {
                return Err(parse_err(line, format!("duplicate section [{name}]")));
            }
            sections.insert(name.clone(), (Section::default(), line));
            current = name;
            skipping = false;
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, "expected 'key = value'"))?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(parse_err(line, format!("bad key '{key}'")));
        }
        let value = parse_value(value.trim(), line)?;
        if skipping {
            continue;
        }
        let section = &mut sections.get_mut(&current).expect("inserted").0;
        if section.entries.insert(key.to_string(), (value, line)).is_some() {
            return Err(parse_err(line, format!("duplicate key '{key}'")));
        }
    }
    Ok(sections)
}

// ---------------------------------------------------------------------------
// typed conversions

fn number(v: &Value, line: usize, what: &str) -> Result<f64, ConfigError> {
    match v {
        Value::Num(x) => Ok(*x),
        _ => Err(parse_err(line, format!("{what}: expected a number, got {v}"))),
    }
}

fn count(v: &Value, line: usize, what: &str) -> Result<usize, ConfigError> {
    let x = number(v, line, what)?;
    if x >= 0.0 && x.fract() == 0.0 && x < 1e12 {
        Ok(x as usize)
    } else {
        Err(parse_err(line, format!("{what}: expected a nonnegative integer, got {x}")))
    }
}

fn boolean(v: &Value, line: usize, what: &str) -> Result<bool, ConfigError> {
    match v {
        Value::Ident(s) if s == "true" => Ok(true),
        Value::Ident(s) if s == "false" => Ok(false),
        _ => Err(parse_err(line, format!("{what}: expected true or false, got {v}"))),
    }
}

fn numbers(v: &Value, line: usize, what: &str) -> Result<Vec<f64>, ConfigError> {
    match v {
        Value::List(items) => items.iter().map(|x| number(x, line, what)).collect(),
        Value::Num(x) => Ok(vec![*x]),
        Value::Call(name, args) if name == "linspace" => {
            let [a, b, n] = bind(args, &["start", "stop", "count"], line, name)?;
            let a = number(&need(a, line, "start")?, line, "start")?;
            let b = number(&need(b, line, "stop")?, line, "stop")?;
            let n = count(&need(n, line, "count")?, line, "count")?;
            if n < 2 {
                return Err(parse_err(line, "linspace needs count >= 2"));
            }
            Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
        }
        _ => Err(parse_err(line, format!("{what}: expected a list of numbers, got {v}"))),
    }
}

/// Matches positional and keyword arguments against `names`.
fn bind<const N: usize>(args: &[Arg], names: &[&str; N], line: usize, call: &str) -> Result<[Option<Value>; N], ConfigError> {
    let mut out: [Option<Value>; N] = std::array::from_fn(|_| None);
    let mut positional = 0;
    for a in args {
        let slot = match &a.key {
            Some(k) => names
                .iter()
                .position(|n| n == k)
                .ok_or_else(|| parse_err(line, format!("{call}: unknown argument '{k}'")))?,
            None => {
                let p = positional;
                positional += 1;
                if p >= N {
                    return Err(parse_err(line, format!("{call}: too many arguments")));
                }
                p
            }
        };
        if out[slot].is_some() {
            return Err(parse_err(line, format!("{call}: argument '{}' given twice", names[slot])));
        }
        out[slot] = Some(a.value.clone());
    }
    Ok(out)
}

fn need(v: Option<Value>, line: usize, what: &str) -> Result<Value, ConfigError> {
    v.ok_or_else(|| parse_err(line, format!("missing argument '{what}'")))
}

fn num_or(v: Option<Value>, default: f64, line: usize, what: &str) -> Result<f64, ConfigError> {
    v.map_or(Ok(default), |v| number(&v, line, what))
}

fn graph(v: &Value, line: usize) -> Result<ScalarGraph, ConfigError> {
    let (name, args): (&str, &[Arg]) = match v {
        Value::Ident(s) => (s.as_str(), &[]),
        Value::Call(s, a) => (s.as_str(), a.as_slice()),
        _ => return Err(parse_err(line, format!("expected a graph, got {v}"))),
    };
    let g = match name {
        "linear" => {
            let [slope] = bind(args, &["slope"], line, name)?;
            ScalarGraph::linear(number(&need(slope, line, "slope")?, line, "slope")?)
        }
        "identity" => {
            bind(args, &[], line, name)?;
            Ok(ScalarGraph::identity())
        }
        "saturating" => {
            let [slope, sat] = bind(args, &["slope", "saturation"], line, name)?;
            ScalarGraph::saturating(
                number(&need(slope, line, "slope")?, line, "slope")?,
                number(&need(sat, line, "saturation")?, line, "saturation")?,
            )
        }
        "physical" => {
            let [h, s, inner] = bind(args, &["h", "s", "inner"], line, name)?;
            let inner = match inner {
                Some(v) => graph(&v, line)?,
                None => ScalarGraph::identity(),
            };
            ScalarGraph::physical(
                number(&need(h, line, "h")?, line, "h")?,
                number(&need(s, line, "s")?, line, "s")?,
                inner,
            )
        }
        "power" => {
            let [p] = bind(args, &["exponent"], line, name)?;
            ScalarGraph::power(number(&need(p, line, "exponent")?, line, "exponent")?)
        }
        "sign" => {
            bind(args, &[], line, name)?;
            Ok(ScalarGraph::sign())
        }
        "sum" => {
            let parts = args
                .iter()
                .map(|a| match a.key {
                    None => graph(&a.value, line),
                    Some(_) => Err(parse_err(line, "sum takes positional graphs only")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            ScalarGraph::composite(parts)
        }
        other => return Err(parse_err(line, format!("unknown graph '{other}'"))),
    };
    g.map_err(|e| parse_err(line, e.to_string()))
}

/// Parses a single graph expression such as `physical(h=1, s=1)`.
pub fn parse_graph(text: &str) -> Result<ScalarGraph, ConfigError> {
    graph(&parse_value(text.trim(), 1)?, 1)
}

fn domain(v: &Value, line: usize) -> Result<MeshPreset, ConfigError> {
    let Value::Call(name, args) = v else {
        return Err(parse_err(line, format!("expected interval(...) or rect(...), got {v}")));
    };
    match name.as_str() {
        "interval" => {
            let [len, n, side] = bind(args, &["length", "n", "gamma1"], line, name)?;
            let side = match side {
                None => GammaOneSide::Right,
                Some(Value::Ident(s)) => match s.as_str() {
                    "left" => GammaOneSide::Left,
                    "right" => GammaOneSide::Right,
                    "both" => GammaOneSide::Both,
                    "none" => GammaOneSide::None,
                    other => return Err(parse_err(line, format!("gamma1: expected left, right, both or none, got '{other}'"))),
                },
                Some(other) => return Err(parse_err(line, format!("gamma1: expected a side, got {other}"))),
            };
            Ok(MeshPreset::Interval {
                length: number(&need(len, line, "length")?, line, "length")?,
                n: count(&need(n, line, "n")?, line, "n")?,
                side,
            })
        }
        "rect" => {
            let [lx, ly, nx, ny, lateral] = bind(args, &["lx", "ly", "nx", "ny", "gamma1"], line, name)?;
            let lateral = match lateral {
                None => true,
                Some(Value::Ident(s)) if s == "lateral" => true,
                Some(Value::Ident(s)) if s == "neumann" || s == "none" => false,
                Some(other) => return Err(parse_err(line, format!("gamma1: expected lateral or neumann, got {other}"))),
            };
            Ok(MeshPreset::Rect {
                lx: number(&need(lx, line, "lx")?, line, "lx")?,
                ly: number(&need(ly, line, "ly")?, line, "ly")?,
                nx: count(&need(nx, line, "nx")?, line, "nx")?,
                ny: count(&need(ny, line, "ny")?, line, "ny")?,
                lateral,
            })
        }
        other => Err(parse_err(line, format!("unknown domain '{other}'"))),
    }
}

fn field(v: &Value, line: usize, mesh: &Mesh, beta: &ScalarGraph) -> Result<SpaceTimeField, ConfigError> {
    let (name, args) = match v {
        Value::Num(x) => return Ok(SpaceTimeField::Constant(*x)),
        Value::Call(name, args) => (name.as_str(), args.as_slice()),
        _ => return Err(parse_err(line, format!("expected a field, got {v}"))),
    };
    match name {
        "constant" => {
            let [c] = bind(args, &["value"], line, name)?;
            Ok(SpaceTimeField::Constant(number(&need(c, line, "value")?, line, "value")?))
        }
        "beta_of" => {
            let [u] = bind(args, &["u"], line, name)?;
            let u = number(&need(u, line, "u")?, line, "u")?;
            Ok(SpaceTimeField::Constant(beta.value(u)))
        }
        "cosine" => {
            let [amp, kx, ky, rate, offset] = bind(args, &["amplitude", "kx", "ky", "rate", "offset"], line, name)?;
            let amp = num_or(amp, 1.0, line, "amplitude")?;
            let kx = num_or(kx, 0.0, line, "kx")?;
            let ky = num_or(ky, 0.0, line, "ky")?;
            let rate = num_or(rate, 0.0, line, "rate")?;
            let offset = num_or(offset, 0.0, line, "offset")?;
            Ok(SpaceTimeField::function(move |p, t| {
                offset + amp * (-rate * t).exp() * (kx * p[0]).cos() * (ky * p[1]).cos()
            }))
        }
        "random" => {
            let [seed, low, high] = bind(args, &["seed", "low", "high"], line, name)?;
            let seed = count(&need(seed, line, "seed")?, line, "seed")? as u64;
            let low = num_or(low, -1.0, line, "low")?;
            let high = num_or(high, 1.0, line, "high")?;
            if !(low <= high) {
                return Err(parse_err(line, "random: need low <= high"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..mesh.node_count())
                .map(|_| if low == high { low } else { rng.random_range(low..high) })
                .collect();
            Ok(SpaceTimeField::Nodal(values))
        }
        "sum" => {
            let parts = args
                .iter()
                .map(|a| match a.key {
                    None => field(&a.value, line, mesh, beta),
                    Some(_) => Err(parse_err(line, "sum takes positional fields only")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SpaceTimeField::Sum(parts))
        }
        other => Err(parse_err(line, format!("unknown field '{other}'"))),
    }
}

fn exact_solution(v: &Value, line: usize) -> Result<CosineMode, ConfigError> {
    let Value::Call(name, args) = v else {
        return Err(parse_err(line, format!("expected affine(...), decay(...) or constant(...), got {v}")));
    };
    match name.as_str() {
        "constant" => {
            let [c] = bind(args, &["value"], line, name)?;
            Ok(CosineMode::constant(number(&need(c, line, "value")?, line, "value")?))
        }
        "affine" => {
            let [a, b, kx, ky] = bind(args, &["a", "b", "kx", "ky"], line, name)?;
            Ok(CosineMode::affine(
                num_or(a, 1.0, line, "a")?,
                num_or(b, 0.0, line, "b")?,
                num_or(kx, 0.0, line, "kx")?,
                num_or(ky, 0.0, line, "ky")?,
            ))
        }
        "decay" => {
            let [amp, rate, kx, ky] = bind(args, &["amplitude", "rate", "kx", "ky"], line, name)?;
            Ok(CosineMode::decaying(
                num_or(amp, 1.0, line, "amplitude")?,
                num_or(rate, 1.0, line, "rate")?,
                num_or(kx, 0.0, line, "kx")?,
                num_or(ky, 0.0, line, "ky")?,
            ))
        }
        other => Err(parse_err(line, format!("unknown exact solution '{other}'"))),
    }
}

// ---------------------------------------------------------------------------
// run configuration

#[derive(Debug, Clone)]
pub struct GraphCheckPlan {
    pub graphs: Vec<ScalarGraph>,
    pub lambdas: Vec<f64>,
    pub samples: Vec<f64>,
}

impl Default for GraphCheckPlan {
    fn default() -> Self {
        GraphCheckPlan {
            graphs: builtin_graphs(),
            lambdas: vec![1.0, 0.5, 0.25, 0.125],
            samples: (0..25).map(|i| -2.88 + 0.24 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergencePlan {
    pub setup: ConvergenceSetup,
    /// Subdivisions per side for the spatial study.
    pub resolutions: Vec<usize>,
    pub space_tau: f64,
    pub taus: Vec<f64>,
    /// Subdivisions per side for the temporal study.
    pub time_resolution: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub problem: Option<ProblemSpec>,
    /// Second problem of a dependence study.
    pub perturbed: Option<ProblemSpec>,
    pub solver: SolverConfig,
    pub convergence: Option<ConvergencePlan>,
    pub graph_check: GraphCheckPlan,
    /// Ignored keys and sections in non-strict mode.
    pub warnings: Vec<String>,
}

struct ProblemDraft {
    preset: MeshPreset,
    mesh: Mesh,
    c0: f64,
    gamma: ScalarGraph,
    beta: ScalarGraph,
    final_time: f64,
    g: Option<(Value, usize)>,
    h: Option<(Value, usize)>,
    u0: Option<(Value, usize)>,
}

fn required(section: &mut Section, key: &str, name: &str, header: usize) -> Result<(Value, usize), ConfigError> {
    section
        .take(key)
        .ok_or_else(|| parse_err(header, format!("[{name}] is missing required key '{key}'")))
}

impl ProblemDraft {
    fn parse(section: &mut Section, header: usize) -> Result<Self, ConfigError> {
        let (v, l) = required(section, "domain", "problem", header)?;
        let preset = domain(&v, l)?;
        let mesh = preset.build().map_err(|e| parse_err(l, e.to_string()))?;
        let c0 = match section.take("c0") {
            Some((v, l)) => number(&v, l, "c0")?,
            None => 1.0,
        };
        let (v, l) = required(section, "gamma", "problem", header)?;
        let gamma = graph(&v, l)?;
        let (v, l) = required(section, "beta", "problem", header)?;
        let beta = graph(&v, l)?;
        let (v, l) = required(section, "final_time", "problem", header)?;
        let final_time = number(&v, l, "final_time")?;
        Ok(ProblemDraft {
            preset,
            mesh,
            c0,
            gamma,
            beta,
            final_time,
            g: section.take("g"),
            h: section.take("h"),
            u0: section.take("u0"),
        })
    }

    fn build(&self, g: Option<&(Value, usize)>, h: Option<&(Value, usize)>, u0: Option<&(Value, usize)>) -> Result<ProblemSpec, ConfigError> {
        let to_field = |entry: Option<&(Value, usize)>| -> Result<SpaceTimeField, ConfigError> {
            match entry {
                Some((v, l)) => field(v, *l, &self.mesh, &self.beta),
                None => Ok(SpaceTimeField::zero()),
            }
        };
        let u0 = to_field(u0)?.sample(&self.mesh, 0.0);
        ProblemSpec::new(
            self.mesh.clone(),
            self.c0,
            self.gamma.clone(),
            self.beta.clone(),
            to_field(g)?,
            to_field(h)?,
            u0,
            self.final_time,
        )
        .map_err(|e| invalid(e.to_string()))
    }
}

fn parse_solver(section: &mut Section) -> Result<SolverConfig, ConfigError> {
    let mut cfg = SolverConfig::default();
    if let Some((v, l)) = section.take("tau") {
        cfg.tau = number(&v, l, "tau")?;
    }
    if let Some((v, l)) = section.take("lambda_schedule") {
        cfg.lambda_schedule = numbers(&v, l, "lambda_schedule")?;
    }
    if let Some((v, l)) = section.take("epsilon") {
        cfg.epsilon = number(&v, l, "epsilon")?;
    }
    if let Some((v, l)) = section.take("mass_regularization") {
        cfg.mass_regularization = boolean(&v, l, "mass_regularization")?;
    }
    if let Some((v, l)) = section.take("smooth_initial") {
        cfg.smooth_initial = boolean(&v, l, "smooth_initial")?;
    }
    if let Some((v, l)) = section.take("picard_damping") {
        cfg.picard_damping = number(&v, l, "picard_damping")?;
    }
    if let Some((v, l)) = section.take("picard_tol") {
        cfg.picard_tol = number(&v, l, "picard_tol")?;
    }
    if let Some((v, l)) = section.take("newton_tol") {
        cfg.newton_tol = number(&v, l, "newton_tol")?;
    }
    if let Some((v, l)) = section.take("max_iters") {
        cfg.max_iters = count(&v, l, "max_iters")?;
    }
    if let Some((v, l)) = section.take("solver") {
        cfg.solver_kind = match &v {
            Value::Ident(s) if s == "picard" => SolverKind::Picard,
            Value::Ident(s) if s == "newton" => SolverKind::Newton,
            Value::Ident(s) if s == "both" => SolverKind::Both,
            _ => return Err(parse_err(l, format!("solver: expected picard, newton or both, got {v}"))),
        };
    }
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(cfg)
}

/// Parses a configuration whose command is given by a `command = ...` line.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, None, true)
}

/// Parses a configuration, with an optional command from outside the file.
///
/// When both are present they must agree. With `strict = false` unknown keys
/// and sections are reported in [`RunConfig::warnings`] instead of failing.
pub fn parse_config_with(text: &str, command: Option<Command>, strict: bool) -> Result<RunConfig, ConfigError> {
    let mut warnings = Vec::new();
    let mut sections = split_sections(text, strict, &mut warnings)?;
    let mut take_section = |name: &str| sections.remove(name);

    let (mut top, _) = take_section("").expect("top level always present");
    let file_command = match top.take("command") {
        Some((Value::Ident(s), l)) => Some(s.parse::<Command>().map_err(|e| parse_err(l, e.to_string()))?),
        Some((v, l)) => return Err(parse_err(l, format!("command: expected a name, got {v}"))),
        None => None,
    };
    top.leftovers("top level", strict, &mut warnings)?;
    let command = match (command, file_command) {
        (Some(a), Some(b)) if a != b => return Err(invalid(format!("command '{a}' conflicts with 'command = {b}' in the file"))),
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(invalid("no command given")),
    };

    let solver = match take_section("solver") {
        Some((mut s, _)) => {
            let cfg = parse_solver(&mut s)?;
            s.leftovers("solver", strict, &mut warnings)?;
            cfg
        }
        None => SolverConfig::default(),
    };

    let draft = match take_section("problem") {
        Some((mut s, header)) => {
            let d = ProblemDraft::parse(&mut s, header)?;
            s.leftovers("problem", strict, &mut warnings)?;
            Some(d)
        }
        None => None,
    };
    let needs_problem = !matches!(command, Command::GraphCheck);
    if needs_problem && draft.is_none() {
        return Err(invalid(format!("command '{command}' needs a [problem] section")));
    }

    let mut problem = None;
    let mut perturbed = None;
    let mut convergence = None;
    if let Some(d) = &draft {
        if command == Command::Convergence {
            for (key, entry) in [("g", &d.g), ("h", &d.h), ("u0", &d.u0)] {
                if let Some((_, l)) = entry {
                    return Err(parse_err(*l, format!("'{key}' is manufactured from the exact solution in a convergence study")));
                }
            }
        } else {
            let spec = d.build(d.g.as_ref(), d.h.as_ref(), d.u0.as_ref())?;
            problem = Some(spec);
        }
    }

    match take_section("perturbation") {
        Some((mut s, _)) => {
            if command != Command::Dependence {
                warnings.push("[perturbation] is only used by the dependence command".into());
            }
            let d = draft.as_ref().ok_or_else(|| invalid("[perturbation] needs a [problem] section"))?;
            let g = s.take("g");
            let h = s.take("h");
            let u0 = s.take("u0");
            s.leftovers("perturbation", strict, &mut warnings)?;
            let pick = |own: &Option<(Value, usize)>, base: &Option<(Value, usize)>| own.clone().or_else(|| base.clone());
            perturbed = Some(d.build(pick(&g, &d.g).as_ref(), pick(&h, &d.h).as_ref(), pick(&u0, &d.u0).as_ref())?);
        }
        None if command == Command::Dependence => {
            return Err(invalid("command 'dependence' needs a [perturbation] section"));
        }
        None => {}
    }

    match take_section("convergence") {
        Some((mut s, header)) => {
            let d = draft.as_ref().ok_or_else(|| invalid("[convergence] needs a [problem] section"))?;
            let (v, l) = required(&mut s, "exact", "convergence", header)?;
            let exact = exact_solution(&v, l)?;
            let (v, l) = required(&mut s, "resolutions", "convergence", header)?;
            let resolutions = numbers(&v, l, "resolutions")?
                .into_iter()
                .map(|x| count(&Value::Num(x), l, "resolutions"))
                .collect::<Result<Vec<_>, _>>()?;
            let (v, l) = required(&mut s, "taus", "convergence", header)?;
            let taus = numbers(&v, l, "taus")?;
            let space_tau = match s.take("space_tau") {
                Some((v, l)) => number(&v, l, "space_tau")?,
                None => solver.tau,
            };
            let default_resolution = match d.preset {
                MeshPreset::Interval { n, .. } => n,
                MeshPreset::Rect { nx, .. } => nx,
            };
            let time_resolution = match s.take("time_resolution") {
                Some((v, l)) => count(&v, l, "time_resolution")?,
                None => default_resolution,
            };
            s.leftovers("convergence", strict, &mut warnings)?;
            if resolutions.len() < 3 || taus.len() < 3 {
                return Err(invalid("a convergence study needs at least 3 levels per axis"));
            }
            if resolutions.contains(&0) || time_resolution == 0 {
                return Err(invalid("resolutions must be positive"));
            }
            for &t in taus.iter().chain([space_tau].iter()) {
                let probe = SolverConfig { tau: t, ..solver.clone() };
                probe.step_count(d.final_time).map_err(|e| invalid(e.to_string()))?;
            }
            convergence = Some(ConvergencePlan {
                setup: ConvergenceSetup {
                    preset: d.preset.with_resolution(time_resolution),
                    c0: d.c0,
                    gamma: d.gamma.clone(),
                    beta: d.beta.clone(),
                    final_time: d.final_time,
                    exact: Arc::new(exact),
                    solver: solver.clone(),
                },
                resolutions,
                space_tau,
                taus,
                time_resolution,
            });
        }
        None if command == Command::Convergence => {
            return Err(invalid("command 'convergence' needs a [convergence] section"));
        }
        None => {}
    }

    let mut graph_check = GraphCheckPlan::default();
    if let Some((mut s, _)) = take_section("graph-check") {
        if let Some((v, l)) = s.take("graphs") {
            let Value::List(items) = &v else {
                return Err(parse_err(l, "graphs: expected a list"));
            };
            graph_check.graphs = items.iter().map(|g| graph(g, l)).collect::<Result<_, _>>()?;
        }
        if let Some((v, l)) = s.take("lambdas") {
            graph_check.lambdas = numbers(&v, l, "lambdas")?;
        }
        if let Some((v, l)) = s.take("samples") {
            graph_check.samples = numbers(&v, l, "samples")?;
        }
        s.leftovers("graph-check", strict, &mut warnings)?;
        if graph_check.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(invalid("graph-check lambdas must be positive"));
        }
        if graph_check.graphs.is_empty() || graph_check.samples.is_empty() {
            return Err(invalid("graph-check needs at least one graph and one sample"));
        }
    }

    if let Some(spec) = &problem {
        if command != Command::GraphCheck {
            solver.step_count(spec.final_time).map_err(|e| invalid(e.to_string()))?;
        }
    }
    if command == Command::Continuation && solver.lambda_schedule.len() < 2 {
        return Err(invalid("continuation needs at least two lambda values"));
    }

    Ok(RunConfig {
        command,
        problem,
        perturbed,
        solver,
        convergence,
        graph_check,
        warnings,
    })
}
