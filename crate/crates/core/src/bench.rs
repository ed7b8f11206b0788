//! Line-oriented optical-bench description language.
//!
//! ```text
//! pump wavelength_nm=351
//! grid n=2048 extent=0.0256 p_max=1.2566e5
//! source spdc
//! arm A:
//!   free d=0.5
//!   mask double_slit d=5e-4 a=1e-4
//!   free d=0.1
//!   detector farfield_point
//! arm B: free d=0.5 detector array min=-4e-3 max=4e-3 n=256
//! ```
//!
//! Elements may follow `arm X:` on the same line or on the lines below it.
//! Lengths are in meters; a key ending in `_nm` takes nanometers.

use std::fmt::{self, Write as _};

use crate::optics::BucketMode;
use crate::sources::{ModeProfile, PhaseMode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message} (at `{token}`)")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub token: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDecl {
    pub n: usize,
    pub extent: f64,
    pub p_max: f64,
}

impl Default for GridDecl {
    fn default() -> Self {
        GridDecl { n: 2048, extent: 0.0256, p_max: 1.2566e5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    Spdc,
    Classical { epsilon: f64 },
    RandomPhase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceDecl {
    pub kind: SourceKind,
    /// Support of the mode weights; the grid band when absent.
    pub p_max: Option<f64>,
    pub profile: ModeProfile,
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub phases: PhaseMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskDecl {
    DoubleSlit { d: f64, a: f64 },
    SingleSlit { a: f64 },
    Gaussian { w: f64 },
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementDecl {
    Free { d: f64 },
    Lens { f: f64 },
    Mask(MaskDecl),
    Pupil { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorDecl {
    Bucket(BucketMode),
    Array { min: f64, max: f64, n: usize },
    FarFieldPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmDecl {
    pub elements: Vec<ElementDecl>,
    pub detector: DetectorDecl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmId {
    A,
    B,
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArmId::A => "A",
            ArmId::B => "B",
        })
    }
}

/// Extra singles measurement: a point array replacing the named arm's detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglesDecl {
    pub arm: ArmId,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchModel {
    pub pump_wavelength_nm: f64,
    pub grid: GridDecl,
    pub source: SourceDecl,
    pub arm_a: ArmDecl,
    pub arm_b: ArmDecl,
    /// Reference image `|t(scale x)|^2` built from the last mask in arm A.
    pub reference_scale: Option<f64>,
    pub singles: Option<SinglesDecl>,
}

impl BenchModel {
    pub fn seed(&self) -> Option<u64> {
        self.source.seed
    }

    pub fn arm(&self, id: ArmId) -> &ArmDecl {
        match id {
            ArmId::A => &self.arm_a,
            ArmId::B => &self.arm_b,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub allow_diverging: bool,
}

#[derive(Debug, Clone)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn err(t: &Tok, message: impl Into<String>) -> ParseError {
    ParseError { line: t.line, column: t.col, message: message.into(), token: t.text.to_string() }
}

fn tokenize(line: &str, lineno: usize) -> Vec<Tok<'_>> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let col_of = |byte: usize| line[..byte].chars().count() + 1;
    for (i, ch) in body.char_indices() {
        let sep = ch.is_whitespace() || ch == '=' || ch == ':';
        if sep {
            if let Some(s) = start.take() {
                out.push(Tok { text: &body[s..i], line: lineno, col: col_of(s) });
            }
            if ch == '=' || ch == ':' {
                out.push(Tok { text: &body[i..i + 1], line: lineno, col: col_of(i) });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok { text: &body[s..], line: lineno, col: col_of(s) });
    }
    out
}

const ELEMENT_WORDS: [&str; 5] = ["free", "lens", "mask", "pupil", "detector"];

/// `key = value` pairs following a keyword.
struct Pairs<'a> {
    items: Vec<(Tok<'a>, Tok<'a>)>,
    used: Vec<bool>,
    anchor: Tok<'a>,
}

impl<'a> Pairs<'a> {
    fn take(&mut self, key: &str) -> Option<(Tok<'a>, Tok<'a>, f64)> {
        for (i, (k, v)) in self.items.iter().enumerate() {
            if self.used[i] {
                continue;
            }
            if k.text == key {
                self.used[i] = true;
                return Some((k.clone(), v.clone(), 1.0));
            }
            if k.text.strip_suffix("_nm") == Some(key) {
                self.used[i] = true;
                return Some((k.clone(), v.clone(), 1e-9));
            }
        }
        None
    }

    fn num(&mut self, key: &str, what: &str) -> Result<f64, ParseError> {
        let (_, v, scale) = self
            .take(key)
            .ok_or_else(|| err(&self.anchor, format!("{what} needs `{key}=<number>`")))?;
        Ok(number(&v)? * scale)
    }

    fn opt_num(&mut self, key: &str) -> Result<Option<f64>, ParseError> {
        match self.take(key) {
            Some((_, v, scale)) => Ok(Some(number(&v)? * scale)),
            None => Ok(None),
        }
    }

    fn positive(&mut self, key: &str, what: &str) -> Result<f64, ParseError> {
        let (k, v, scale) = self
            .take(key)
            .ok_or_else(|| err(&self.anchor, format!("{what} needs `{key}=<number>`")))?;
        let x = number(&v)? * scale;
        if x <= 0.0 {
            return Err(err(&v, format!("{what}: `{}` must be positive", k.text)));
        }
        Ok(x)
    }

    fn int(&mut self, key: &str, what: &str) -> Result<usize, ParseError> {
        let (_, v, _) = self
            .take(key)
            .ok_or_else(|| err(&self.anchor, format!("{what} needs `{key}=<integer>`")))?;
        integer(&v)
    }

    fn word(&mut self, key: &str) -> Option<Tok<'a>> {
        self.take(key).map(|(_, v, _)| v)
    }

    /// Rejects keys outside `known` before any value is interpreted.
    fn only(self, known: &[&str], what: &str) -> Result<Self, ParseError> {
        for (k, _) in &self.items {
            let base = k.text.strip_suffix("_nm").unwrap_or(k.text);
            if !known.contains(&k.text) && !known.contains(&base) {
                return Err(err(k, format!("unknown key `{}` for {what}", k.text)));
            }
        }
        Ok(self)
    }

    fn finish(&self, what: &str) -> Result<(), ParseError> {
        for (i, (k, _)) in self.items.iter().enumerate() {
            if !self.used[i] {
                return Err(err(k, format!("unknown key `{}` for {what}", k.text)));
            }
        }
        Ok(())
    }
}

fn number(t: &Tok) -> Result<f64, ParseError> {
    match t.text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(err(t, "expected a finite number")),
    }
}

fn integer(t: &Tok) -> Result<usize, ParseError> {
    t.text.parse::<usize>().map_err(|_| err(t, "expected a nonnegative integer"))
}

/// Collects `key = value` pairs from `toks[*pos..]`, stopping at an element
/// keyword when `in_arm` is set.
fn pairs<'a>(toks: &[Tok<'a>], pos: &mut usize, anchor: &Tok<'a>, in_arm: bool) -> Result<Pairs<'a>, ParseError> {
    let mut items = Vec::new();
    while *pos < toks.len() {
        let k = &toks[*pos];
        if in_arm && ELEMENT_WORDS.contains(&k.text) {
            break;
        }
        if k.text == "=" || k.text == ":" {
            return Err(err(k, "expected a key"));
        }
        match (toks.get(*pos + 1), toks.get(*pos + 2)) {
            (Some(eq), Some(v)) if eq.text == "=" && v.text != "=" && v.text != ":" => {
                items.push((k.clone(), v.clone()));
                *pos += 3;
            }
            (Some(eq), _) if eq.text == "=" => return Err(err(eq, "expected a value after `=`")),
            _ => return Err(err(k, format!("expected `{}=<value>`", k.text))),
        }
    }
    let used = vec![false; items.len()];
    Ok(Pairs { items, used, anchor: anchor.clone() })
}

#[derive(Default)]
struct ArmBuilder<'a> {
    id: Option<(ArmId, Tok<'a>)>,
    elements: Vec<ElementDecl>,
    detector: Option<DetectorDecl>,
}

struct Parser<'a> {
    opts: ParseOptions,
    pump: Option<f64>,
    grid: Option<GridDecl>,
    source: Option<SourceDecl>,
    arms: [Option<ArmDecl>; 2],
    current: Option<ArmBuilder<'a>>,
    reference: Option<f64>,
    singles: Option<SinglesDecl>,
    first: Option<Tok<'a>>,
    last: Option<Tok<'a>>,
}

impl<'a> Parser<'a> {
    fn close_arm(&mut self) -> Result<(), ParseError> {
        if let Some(b) = self.current.take() {
            let (id, tok) = b.id.expect("arm builder always has an id");
            let detector = b.detector.ok_or_else(|| {
                err(&tok, format!("arm {id} has no detector; every arm must end with `detector ...`"))
            })?;
            if b.elements.is_empty() {
                return Err(err(&tok, format!("arm {id} needs at least one element before its detector")));
            }
            self.arms[id as usize] = Some(ArmDecl { elements: b.elements, detector });
        }
        Ok(())
    }

    fn statement(&mut self, toks: &[Tok<'a>]) -> Result<(), ParseError> {
        let head = &toks[0];
        if self.pump.is_none() && head.text != "pump" {
            return Err(err(head, "bench must start with `pump wavelength_nm=<number>`"));
        }
        match head.text {
            "free" | "lens" | "mask" | "pupil" | "detector" => {
                if self.current.is_none() {
                    return Err(err(head, "element outside an `arm A:` or `arm B:` block"));
                }
                return self.elements(toks, 0);
            }
            _ => self.close_arm()?,
        }
        let mut pos = 1;
        match head.text {
            "pump" => {
                if self.pump.is_some() {
                    return Err(err(head, "duplicate `pump` header"));
                }
                let mut p = pairs(toks, &mut pos, head, false)?.only(&["wavelength_nm"], "pump")?;
                let (_, v, _) = p
                    .take("wavelength_nm")
                    .filter(|(k, _, _)| k.text == "wavelength_nm")
                    .ok_or_else(|| err(head, "pump needs `wavelength_nm=<number>`"))?;
                let nm = number(&v)?;
                if nm <= 0.0 {
                    return Err(err(&v, "pump wavelength must be positive"));
                }
                p.finish("pump")?;
                self.pump = Some(nm);
            }
            "grid" => {
                if self.grid.is_some() {
                    return Err(err(head, "duplicate `grid` statement"));
                }
                let mut p = pairs(toks, &mut pos, head, false)?.only(&["n", "extent", "p_max"], "grid")?;
                let d = GridDecl::default();
                let n = match p.take("n") {
                    Some((_, v, _)) => integer(&v).and_then(|n| {
                        if n < 64 || n % 2 != 0 {
                            Err(err(&v, "grid n must be an even integer >= 64"))
                        } else {
                            Ok(n)
                        }
                    })?,
                    None => d.n,
                };
                let extent = match p.take("extent") {
                    Some((_, v, s)) => positive_value(&v, s, "grid extent")?,
                    None => d.extent,
                };
                let p_max = match p.take("p_max") {
                    Some((_, v, _)) => positive_value(&v, 1.0, "grid p_max")?,
                    None => d.p_max,
                };
                p.finish("grid")?;
                self.grid = Some(GridDecl { n, extent, p_max });
            }
            "source" => {
                if self.source.is_some() {
                    return Err(err(head, "duplicate `source` statement"));
                }
                let kind_tok = toks
                    .get(1)
                    .ok_or_else(|| err(head, "source needs a kind: spdc, classical or randomphase"))?;
                pos = 2;
                let mut p = pairs(toks, &mut pos, head, false)?.only(
                    &["epsilon", "p_max", "profile", "sigma", "seed", "realizations", "phases"],
                    "source",
                )?;
                let kind = match kind_tok.text {
                    "spdc" => SourceKind::Spdc,
                    "randomphase" => SourceKind::RandomPhase,
                    "classical" => {
                        let (_, v, _) = p
                            .take("epsilon")
                            .ok_or_else(|| err(kind_tok, "classical source needs `epsilon=<number>`"))?;
                        let epsilon = number(&v)?;
                        if epsilon == 0.0 {
                            return Err(err(&v, "epsilon must be nonzero"));
                        }
                        SourceKind::Classical { epsilon }
                    }
                    _ => return Err(err(kind_tok, "unknown source kind (expected spdc, classical or randomphase)")),
                };
                let p_max = match p.take("p_max") {
                    Some((_, v, _)) => Some(positive_value(&v, 1.0, "source p_max")?),
                    None => None,
                };
                let profile = match p.word("profile") {
                    None => match p.opt_num("sigma")? {
                        Some(_) => return Err(err(head, "`sigma` needs `profile=gaussian`")),
                        None => ModeProfile::Flat,
                    },
                    Some(t) if t.text == "flat" => ModeProfile::Flat,
                    Some(t) if t.text == "gaussian" => {
                        ModeProfile::Gaussian { sigma: p.positive("sigma", "gaussian profile")? }
                    }
                    Some(t) => return Err(err(&t, "profile must be flat or gaussian")),
                };
                let seed = match p.take("seed") {
                    Some((_, v, _)) => Some(v.text.parse::<u64>().map_err(|_| err(&v, "seed must be a nonnegative integer"))?),
                    None => None,
                };
                let realizations = match p.take("realizations") {
                    Some((_, v, _)) => {
                        let n = integer(&v)?;
                        if n == 0 {
                            return Err(err(&v, "realizations must be at least 1"));
                        }
                        Some(n)
                    }
                    None => None,
                };
                let phases = match p.word("phases") {
                    None => PhaseMode::Uniform,
                    Some(t) if t.text == "uniform" => PhaseMode::Uniform,
                    Some(t) if t.text == "frozen" => PhaseMode::Frozen,
                    Some(t) => return Err(err(&t, "phases must be uniform or frozen")),
                };
                p.finish("source")?;
                self.source = Some(SourceDecl { kind, p_max, profile, seed, realizations, phases });
            }
            "arm" => {
                let id_tok = toks.get(1).ok_or_else(|| err(head, "arm needs a name: A or B"))?;
                let id = match id_tok.text {
                    "A" => ArmId::A,
                    "B" => ArmId::B,
                    _ => return Err(err(id_tok, "arm name must be A or B")),
                };
                match toks.get(2) {
                    Some(t) if t.text == ":" => {}
                    Some(t) => return Err(err(t, format!("expected `:` after `arm {id}`"))),
                    None => return Err(err(id_tok, format!("expected `:` after `arm {id}`"))),
                }
                if self.arms[id as usize].is_some() {
                    return Err(err(id_tok, format!("arm {id} is defined twice")));
                }
                self.current = Some(ArmBuilder { id: Some((id, id_tok.clone())), ..Default::default() });
                self.elements(toks, 3)?;
            }
            "reference" => {
                if self.reference.is_some() {
                    return Err(err(head, "duplicate `reference` statement"));
                }
                let mut p = pairs(toks, &mut pos, head, false)?.only(&["scale"], "reference")?;
                let scale = p.num("scale", "reference")?;
                if scale == 0.0 {
                    return Err(err(head, "reference scale must be nonzero"));
                }
                p.finish("reference")?;
                self.reference = Some(scale);
            }
            "singles" => {
                if self.singles.is_some() {
                    return Err(err(head, "duplicate `singles` statement"));
                }
                let id_tok = toks.get(1).ok_or_else(|| err(head, "singles needs an arm name: A or B"))?;
                let arm = match id_tok.text {
                    "A" => ArmId::A,
                    "B" => ArmId::B,
                    _ => return Err(err(id_tok, "arm name must be A or B")),
                };
                pos = 2;
                let mut p = pairs(toks, &mut pos, head, false)?.only(&["min", "max", "n"], "singles")?;
                let (min, max, n) = array_keys(&mut p, head, "singles")?;
                p.finish("singles")?;
                self.singles = Some(SinglesDecl { arm, min, max, n });
            }
            _ => return Err(err(head, "unknown statement (expected pump, grid, source, arm, reference or singles)")),
        }
        Ok(())
    }

    fn elements(&mut self, toks: &[Tok<'a>], mut pos: usize) -> Result<(), ParseError> {
        while pos < toks.len() {
            let kw = &toks[pos];
            pos += 1;
            let builder = self.current.as_mut().expect("inside an arm");
            let id = builder.id.as_ref().map(|(i, _)| *i).expect("arm id");
            if builder.detector.is_some() {
                return Err(err(kw, format!("arm {id}: nothing may follow the detector")));
            }
            match kw.text {
                "free" => {
                    let mut p = pairs(toks, &mut pos, kw, true)?.only(&["d"], "free space")?;
                    let d = p.positive("d", "free space")?;
                    p.finish("free")?;
                    builder.elements.push(ElementDecl::Free { d });
                }
                "lens" => {
                    let mut p = pairs(toks, &mut pos, kw, true)?.only(&["f"], "lens")?;
                    let (_, v, scale) =
                        p.take("f").ok_or_else(|| err(kw, "lens needs `f=<number>`"))?;
                    let f = number(&v)? * scale;
                    if f == 0.0 || (f < 0.0 && !self.opts.allow_diverging) {
                        return Err(err(
                            &v,
                            "focal length must be nonzero; negative allowed only with flag --allow-diverging",
                        ));
                    }
                    p.finish("lens")?;
                    builder.elements.push(ElementDecl::Lens { f });
                }
                "pupil" => {
                    let mut p = pairs(toks, &mut pos, kw, true)?.only(&["A"], "pupil")?;
                    let (_, v, _) = p.take("A").filter(|(k, _, _)| k.text == "A").ok_or_else(|| err(kw, "pupil needs `A=<m^2>`"))?;
                    let a = positive_value(&v, 1.0, "pupil A")?;
                    p.finish("pupil")?;
                    builder.elements.push(ElementDecl::Pupil { a });
                }
                "mask" => {
                    let kind = toks.get(pos).ok_or_else(|| {
                        err(kw, "mask needs a kind: double_slit, single_slit, gaussian or file=PATH")
                    })?;
                    let mask = if kind.text == "file" {
                        match (toks.get(pos + 1), toks.get(pos + 2)) {
                            (Some(eq), Some(path)) if eq.text == "=" => {
                                pos += 3;
                                MaskDecl::File(path.text.to_string())
                            }
                            _ => return Err(err(kind, "expected `file=<path>`")),
                        }
                    } else {
                        pos += 1;
                        let raw = pairs(toks, &mut pos, kind, true)?;
                        let known: &[&str] = match kind.text {
                            "double_slit" => &["d", "a"],
                            "single_slit" => &["a"],
                            "gaussian" => &["w"],
                            _ => &[],
                        };
                        let mut p = raw.only(known, kind.text)?;
                        let m = match kind.text {
                            "double_slit" => MaskDecl::DoubleSlit {
                                d: p.positive("d", "double_slit")?,
                                a: p.positive("a", "double_slit")?,
                            },
                            "single_slit" => MaskDecl::SingleSlit { a: p.positive("a", "single_slit")? },
                            "gaussian" => MaskDecl::Gaussian { w: p.positive("w", "gaussian mask")? },
                            _ => {
                                return Err(err(
                                    kind,
                                    "unknown mask kind (expected double_slit, single_slit, gaussian or file=PATH)",
                                ))
                            }
                        };
                        p.finish(kind.text)?;
                        m
                    };
                    builder.elements.push(ElementDecl::Mask(mask));
                }
                "detector" => {
                    let kind = toks
                        .get(pos)
                        .ok_or_else(|| err(kw, "detector needs a kind: bucket, array or farfield_point"))?;
                    pos += 1;
                    let det = match kind.text {
                        "bucket" => match toks.get(pos) {
                            Some(t) if t.text == "amplitude" => {
                                pos += 1;
                                DetectorDecl::Bucket(BucketMode::Amplitude)
                            }
                            Some(t) if t.text == "intensity" => {
                                pos += 1;
                                DetectorDecl::Bucket(BucketMode::IntensitySum)
                            }
                            _ => DetectorDecl::Bucket(BucketMode::IntensitySum),
                        },
                        "farfield_point" => DetectorDecl::FarFieldPoint,
                        "array" => {
                            let mut p = pairs(toks, &mut pos, kind, true)?.only(&["min", "max", "n"], "detector array")?;
                            let (min, max, n) = array_keys(&mut p, kind, "detector array")?;
                            p.finish("detector array")?;
                            DetectorDecl::Array { min, max, n }
                        }
                        _ => return Err(err(kind, "unknown detector kind (expected bucket, array or farfield_point)")),
                    };
                    builder.detector = Some(det);
                }
                _ => {
                    return Err(err(kw, "expected an element: free, lens, mask, pupil or detector"));
                }
            }
        }
        Ok(())
    }
}

fn positive_value(v: &Tok, scale: f64, what: &str) -> Result<f64, ParseError> {
    let x = number(v)? * scale;
    if x <= 0.0 {
        return Err(err(v, format!("{what} must be positive")));
    }
    Ok(x)
}

fn array_keys(p: &mut Pairs, anchor: &Tok, what: &str) -> Result<(f64, f64, usize), ParseError> {
    let min = p.num("min", what)?;
    let max = p.num("max", what)?;
    let n = p.int("n", what)?;
    if max <= min {
        return Err(err(anchor, format!("{what}: max must exceed min")));
    }
    if n < 2 {
        return Err(err(anchor, format!("{what}: n must be at least 2")));
    }
    Ok((min, max, n))
}

pub fn parse(text: &str) -> Result<BenchModel, ParseError> {
    parse_with(text, &ParseOptions::default())
}

pub fn parse_with(text: &str, opts: &ParseOptions) -> Result<BenchModel, ParseError> {
    let mut p = Parser {
        opts: *opts,
        pump: None,
        grid: None,
        source: None,
        arms: [None, None],
        current: None,
        reference: None,
        singles: None,
        first: None,
        last: None,
    };
    for (i, line) in text.lines().enumerate() {
        let toks = tokenize(line, i + 1);
        if toks.is_empty() {
            continue;
        }
        if p.first.is_none() {
            p.first = Some(toks[0].clone());
        }
        p.last = Some(toks[0].clone());
        p.statement(&toks)?;
    }
    p.close_arm()?;
    let at_end = p.last.clone().unwrap_or(Tok { text: "", line: 1, col: 1 });
    let pump = p.pump.ok_or_else(|| err(&at_end, "empty bench: expected `pump wavelength_nm=<number>`"))?;
    let source = p.source.ok_or_else(|| err(&at_end, "bench has no `source` statement"))?;
    let [a, b] = p.arms;
    let arm_a = a.ok_or_else(|| err(&at_end, "bench has no `arm A:` block"))?;
    let arm_b = b.ok_or_else(|| err(&at_end, "bench has no `arm B:` block"))?;
    Ok(BenchModel {
        pump_wavelength_nm: pump,
        grid: p.grid.unwrap_or_default(),
        source,
        arm_a,
        arm_b,
        reference_scale: p.reference,
        singles: p.singles,
    })
}

fn print_arm(out: &mut String, id: ArmId, arm: &ArmDecl) {
    let _ = writeln!(out, "arm {id}:");
    for e in &arm.elements {
        let _ = match e {
            ElementDecl::Free { d } => writeln!(out, "  free d={d}"),
            ElementDecl::Lens { f } => writeln!(out, "  lens f={f}"),
            ElementDecl::Pupil { a } => writeln!(out, "  pupil A={a}"),
            ElementDecl::Mask(MaskDecl::DoubleSlit { d, a }) => writeln!(out, "  mask double_slit d={d} a={a}"),
            ElementDecl::Mask(MaskDecl::SingleSlit { a }) => writeln!(out, "  mask single_slit a={a}"),
            ElementDecl::Mask(MaskDecl::Gaussian { w }) => writeln!(out, "  mask gaussian w={w}"),
            ElementDecl::Mask(MaskDecl::File(path)) => writeln!(out, "  mask file={path}"),
        };
    }
    let _ = match arm.detector {
        DetectorDecl::Bucket(BucketMode::IntensitySum) => writeln!(out, "  detector bucket"),
        DetectorDecl::Bucket(BucketMode::Amplitude) => writeln!(out, "  detector bucket amplitude"),
        DetectorDecl::FarFieldPoint => writeln!(out, "  detector farfield_point"),
        DetectorDecl::Array { min, max, n } => writeln!(out, "  detector array min={min} max={max} n={n}"),
    };
}

/// Canonical text form; `parse(&print(m)) == m`.
pub fn print(model: &BenchModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pump wavelength_nm={}", model.pump_wavelength_nm);
    let g = &model.grid;
    let _ = writeln!(out, "grid n={} extent={} p_max={}", g.n, g.extent, g.p_max);
    let s = &model.source;
    let _ = match s.kind {
        SourceKind::Spdc => write!(out, "source spdc"),
        SourceKind::RandomPhase => write!(out, "source randomphase"),
        SourceKind::Classical { epsilon } => write!(out, "source classical epsilon={epsilon}"),
    };
    if let Some(p) = s.p_max {
        let _ = write!(out, " p_max={p}");
    }
    if let ModeProfile::Gaussian { sigma } = s.profile {
        let _ = write!(out, " profile=gaussian sigma={sigma}");
    }
    if let Some(seed) = s.seed {
        let _ = write!(out, " seed={seed}");
    }
    if let Some(n) = s.realizations {
        let _ = write!(out, " realizations={n}");
    }
    if s.phases == PhaseMode::Frozen {
        let _ = write!(out, " phases=frozen");
    }
    out.push('\n');
    print_arm(&mut out, ArmId::A, &model.arm_a);
    print_arm(&mut out, ArmId::B, &model.arm_b);
    if let Some(scale) = model.reference_scale {
        let _ = writeln!(out, "reference scale={scale}");
    }
    if let Some(sg) = &model.singles {
        let _ = writeln!(out, "singles {} min={} max={} n={}", sg.arm, sg.min, sg.max, sg.n);
    }
    out
}

/// Bench files shipped with the library, by file name.
pub const PRESETS: [(&str, &str); 5] = [
    ("fig1_ghost_image.bench", include_str!("../presets/fig1_ghost_image.bench")),
    ("fig2_classical_image.bench", include_str!("../presets/fig2_classical_image.bench")),
    ("fig3_ghost_interference.bench", include_str!("../presets/fig3_ghost_interference.bench")),
    ("classical_interference.bench", include_str!("../presets/classical_interference.bench")),
    ("klyshko.bench", include_str!("../presets/klyshko.bench")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name || n.strip_suffix(".bench") == Some(name))
        .map(|(_, t)| *t)
}
