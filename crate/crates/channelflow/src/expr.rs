//! Closed-form profile expressions.
//!
//! Wall profiles are small formula trees (constants, the abscissa, arithmetic,
//! `pow`, `sin`, `cos`, `exp`, `tanh`, `smoothstep`). Evaluation returns the
//! value together with exact first and second derivatives via second-order
//! forward jets, so geometry quantities (normals, curvature, quadrature
//! weights) never rely on finite differences. The tree also exposes enough
//! symbolic structure to classify the far-field growth of a profile, which is
//! what decides whether improper integrals like `int f^(-5/3)` diverge.

use crate::error::ExprError;
use crate::scalar::Scalar;
use num_traits::Float;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    /// 0.5 (1 + tanh x): a C-infinity monotone step.
    Smoothstep,
}

/// Value, first and second derivative at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2<R> {
    pub v: R,
    pub d1: R,
    pub d2: R,
}

impl<R: Scalar> Jet2<R> {
    pub fn constant(v: R) -> Self {
        Jet2 { v, d1: R::zero(), d2: R::zero() }
    }

    pub fn variable(v: R) -> Self {
        Jet2 { v, d1: R::one(), d2: R::zero() }
    }

    fn add(self, o: Self) -> Self {
        Jet2 { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }

    fn sub(self, o: Self) -> Self {
        Jet2 { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }

    fn mul(self, o: Self) -> Self {
        Jet2 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + R::lit(2.0) * self.d1 * o.d1 + self.v * o.d2,
        }
    }

    fn div(self, o: Self) -> Self {
        let w = self.v / o.v;
        let d1 = (self.d1 - w * o.d1) / o.v;
        let d2 = (self.d2 - R::lit(2.0) * d1 * o.d1 - w * o.d2) / o.v;
        Jet2 { v: w, d1, d2 }
    }

    fn neg(self) -> Self {
        Jet2 { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }

    /// Chain rule for a scalar map with given value and two derivatives at self.v.
    fn compose(self, f: R, df: R, ddf: R) -> Self {
        Jet2 {
            v: f,
            d1: df * self.d1,
            d2: ddf * self.d1 * self.d1 + df * self.d2,
        }
    }

    fn powf_const(self, e: f64) -> Self {
        // Integer exponents stay valid for non-positive bases.
        if e.fract() == 0.0 && e.abs() < 64.0 {
            let n = e as i32;
            let f = Float::powi(self.v, n);
            let df = R::lit(e) * Float::powi(self.v, n - 1);
            let ddf = R::lit(e * (e - 1.0)) * Float::powi(self.v, n - 2);
            self.compose(f, df, ddf)
        } else {
            let f = Float::powf(self.v, R::lit(e));
            let df = R::lit(e) * Float::powf(self.v, R::lit(e - 1.0));
            let ddf = R::lit(e * (e - 1.0)) * Float::powf(self.v, R::lit(e - 2.0));
            self.compose(f, df, ddf)
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        Parser { src: src.as_bytes(), pos: 0 }.parse_all()
    }

    /// Value at `x`.
    pub fn eval<R: Scalar>(&self, x: R) -> R {
        self.jet(x).v
    }

    /// Value with exact first and second derivatives at `x`.
    pub fn jet<R: Scalar>(&self, x: R) -> Jet2<R> {
        match self {
            Expr::Num(c) => Jet2::constant(R::lit(*c)),
            Expr::Var => Jet2::variable(x),
            Expr::Add(a, b) => a.jet(x).add(b.jet(x)),
            Expr::Sub(a, b) => a.jet(x).sub(b.jet(x)),
            Expr::Mul(a, b) => a.jet(x).mul(b.jet(x)),
            Expr::Div(a, b) => a.jet(x).div(b.jet(x)),
            Expr::Neg(a) => a.jet(x).neg(),
            Expr::Pow(a, b) => {
                let u = a.jet(x);
                if let Expr::Num(e) = **b {
                    u.powf_const(e)
                } else {
                    // u^v = exp(v ln u); requires u > 0.
                    let v = b.jet(x);
                    let lnu = u.compose(Float::ln(u.v), u.v.recip(), -(u.v * u.v).recip());
                    let w = v.mul(lnu);
                    let ew = Float::exp(w.v);
                    w.compose(ew, ew, ew)
                }
            }
            Expr::Call(f, a) => {
                let u = a.jet(x);
                match f {
                    Func::Sin => u.compose(Float::sin(u.v), Float::cos(u.v), -Float::sin(u.v)),
                    Func::Cos => u.compose(Float::cos(u.v), -Float::sin(u.v), -Float::cos(u.v)),
                    Func::Exp => {
                        let e = Float::exp(u.v);
                        u.compose(e, e, e)
                    }
                    Func::Tanh => {
                        let t = Float::tanh(u.v);
                        let s = R::one() - t * t;
                        u.compose(t, s, R::lit(-2.0) * t * s)
                    }
                    Func::Smoothstep => {
                        let t = Float::tanh(u.v);
                        let s = R::one() - t * t;
                        let half = R::lit(0.5);
                        u.compose(half * (R::one() + t), half * s, -t * s)
                    }
                }
            }
        }
    }

    /// Far-field behaviour as the abscissa goes to +inf or -inf.
    pub fn asymptotics(&self, dir: Direction) -> Asym {
        match self {
            Expr::Num(c) => Asym::Power { coef: *c, power: 0.0 },
            Expr::Var => Asym::Power {
                coef: match dir {
                    Direction::PlusInf => 1.0,
                    Direction::MinusInf => -1.0,
                },
                power: 1.0,
            },
            Expr::Add(a, b) => asym_add(a.asymptotics(dir), b.asymptotics(dir)),
            Expr::Sub(a, b) => asym_add(a.asymptotics(dir), asym_neg(b.asymptotics(dir))),
            Expr::Neg(a) => asym_neg(a.asymptotics(dir)),
            Expr::Mul(a, b) => asym_mul(a.asymptotics(dir), b.asymptotics(dir)),
            Expr::Div(a, b) => asym_mul(a.asymptotics(dir), asym_inv(b.asymptotics(dir))),
            Expr::Pow(a, b) => match **b {
                Expr::Num(e) => asym_pow(a.asymptotics(dir), e),
                _ => Asym::Unknown,
            },
            Expr::Call(f, a) => {
                let u = a.asymptotics(dir);
                match f {
                    Func::Sin => match u {
                        Asym::Power { coef, power } if power == 0.0 => {
                            Asym::Power { coef: coef.sin(), power: 0.0 }
                        }
                        _ => Asym::Bounded { lo: -1.0, hi: 1.0 },
                    },
                    Func::Cos => match u {
                        Asym::Power { coef, power } if power == 0.0 => {
                            Asym::Power { coef: coef.cos(), power: 0.0 }
                        }
                        _ => Asym::Bounded { lo: -1.0, hi: 1.0 },
                    },
                    Func::Exp => match u {
                        Asym::Power { coef, power } if power == 0.0 => {
                            Asym::Power { coef: coef.exp(), power: 0.0 }
                        }
                        Asym::Power { coef, power } if power > 0.0 && coef < 0.0 => {
                            Asym::DecaysSuper
                        }
                        Asym::Power { coef, power } if power > 0.0 && coef > 0.0 => {
                            Asym::GrowsSuper
                        }
                        Asym::DecaysSuper => Asym::Power { coef: 1.0, power: 0.0 },
                        _ => Asym::Unknown,
                    },
                    Func::Tanh => match u {
                        Asym::Power { coef, power } if power == 0.0 => {
                            Asym::Power { coef: coef.tanh(), power: 0.0 }
                        }
                        Asym::Power { coef, power } if power > 0.0 => {
                            Asym::Power { coef: coef.signum(), power: 0.0 }
                        }
                        Asym::GrowsSuper => Asym::Power { coef: 1.0, power: 0.0 },
                        Asym::DecaysSuper => Asym::Power { coef: 0.0, power: 0.0 },
                        _ => Asym::Bounded { lo: -1.0, hi: 1.0 },
                    },
                    Func::Smoothstep => match u {
                        Asym::Power { coef, power } if power == 0.0 => {
                            Asym::Power { coef: 0.5 * (1.0 + coef.tanh()), power: 0.0 }
                        }
                        Asym::Power { coef, power } if power > 0.0 => {
                            Asym::Power { coef: if coef > 0.0 { 1.0 } else { 0.0 }, power: 0.0 }
                        }
                        _ => Asym::Bounded { lo: 0.0, hi: 1.0 },
                    },
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    PlusInf,
    MinusInf,
}

/// Leading behaviour of an expression as |x1| grows, written in terms of
/// t -> +inf along the chosen direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asym {
    /// ~ coef * t^power (power = 0 means the limit is exactly coef).
    Power { coef: f64, power: f64 },
    /// Bounded, not necessarily convergent (trig of an unbounded argument).
    Bounded { lo: f64, hi: f64 },
    /// Grows faster than any power.
    GrowsSuper,
    /// Decays faster than any power.
    DecaysSuper,
    Unknown,
}

fn asym_neg(a: Asym) -> Asym {
    match a {
        Asym::Power { coef, power } => Asym::Power { coef: -coef, power },
        Asym::Bounded { lo, hi } => Asym::Bounded { lo: -hi, hi: -lo },
        Asym::GrowsSuper | Asym::DecaysSuper | Asym::Unknown => Asym::Unknown,
    }
}

fn asym_add(a: Asym, b: Asym) -> Asym {
    use Asym::*;
    match (a, b) {
        (Unknown, _) | (_, Unknown) => Unknown,
        (Power { coef: c1, power: p1 }, Power { coef: c2, power: p2 }) => {
            if (p1 - p2).abs() < 1e-14 {
                let c = c1 + c2;
                if c == 0.0 && p1 != 0.0 {
                    Unknown // leading terms cancel; lower order not tracked
                } else {
                    Power { coef: c, power: p1 }
                }
            } else if p1 > p2 {
                Power { coef: c1, power: p1 }
            } else {
                Power { coef: c2, power: p2 }
            }
        }
        (Power { coef, power }, Bounded { lo, hi }) | (Bounded { lo, hi }, Power { coef, power }) => {
            if power > 0.0 {
                Power { coef, power }
            } else if power == 0.0 {
                Bounded { lo: lo + coef, hi: hi + coef }
            } else {
                Bounded { lo, hi }
            }
        }
        (Bounded { lo: a1, hi: b1 }, Bounded { lo: a2, hi: b2 }) => Bounded { lo: a1 + a2, hi: b1 + b2 },
        (GrowsSuper, Power { .. }) | (Power { .. }, GrowsSuper) => GrowsSuper,
        (GrowsSuper, Bounded { .. }) | (Bounded { .. }, GrowsSuper) => GrowsSuper,
        (DecaysSuper, x) | (x, DecaysSuper) => match x {
            DecaysSuper => DecaysSuper,
            Power { coef, power } => Power { coef, power },
            Bounded { lo, hi } => Bounded { lo, hi },
            _ => Unknown,
        },
        (GrowsSuper, GrowsSuper) => GrowsSuper,
    }
}

fn asym_mul(a: Asym, b: Asym) -> Asym {
    use Asym::*;
    match (a, b) {
        (Unknown, _) | (_, Unknown) => Unknown,
        (Power { coef: c1, power: p1 }, Power { coef: c2, power: p2 }) => {
            if c1 == 0.0 || c2 == 0.0 {
                // exact zero limit only when the other factor cannot grow
                if p1 <= 0.0 && p2 <= 0.0 {
                    Power { coef: 0.0, power: 0.0 }
                } else {
                    Unknown
                }
            } else {
                Power { coef: c1 * c2, power: p1 + p2 }
            }
        }
        (Power { coef, power }, Bounded { lo, hi }) | (Bounded { lo, hi }, Power { coef, power }) => {
            if power == 0.0 {
                let (x, y) = (coef * lo, coef * hi);
                Bounded { lo: x.min(y), hi: x.max(y) }
            } else if power < 0.0 {
                Power { coef: 0.0, power: 0.0 }
            } else {
                Unknown
            }
        }
        (Bounded { lo: a1, hi: b1 }, Bounded { lo: a2, hi: b2 }) => {
            let cs = [a1 * a2, a1 * b2, b1 * a2, b1 * b2];
            let lo = cs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Bounded { lo, hi }
        }
        (GrowsSuper, Power { coef, .. }) | (Power { coef, .. }, GrowsSuper) => {
            if coef > 0.0 {
                GrowsSuper
            } else {
                Unknown
            }
        }
        (DecaysSuper, Power { coef, .. }) | (Power { coef, .. }, DecaysSuper) => {
            if coef != 0.0 {
                DecaysSuper
            } else {
                Power { coef: 0.0, power: 0.0 }
            }
        }
        (DecaysSuper, Bounded { .. }) | (Bounded { .. }, DecaysSuper) => DecaysSuper,
        (DecaysSuper, DecaysSuper) => DecaysSuper,
        (GrowsSuper, GrowsSuper) => GrowsSuper,
        (GrowsSuper, _) | (_, GrowsSuper) => Unknown,
    }
}

fn asym_inv(a: Asym) -> Asym {
    use Asym::*;
    match a {
        Power { coef, power } => {
            if coef == 0.0 {
                Unknown
            } else {
                Power { coef: 1.0 / coef, power: -power }
            }
        }
        Bounded { lo, hi } => {
            if lo > 0.0 {
                Bounded { lo: 1.0 / hi, hi: 1.0 / lo }
            } else if hi < 0.0 {
                Bounded { lo: 1.0 / lo, hi: 1.0 / hi }
            } else {
                Unknown
            }
        }
        GrowsSuper => DecaysSuper,
        DecaysSuper => GrowsSuper,
        Unknown => Unknown,
    }
}

fn asym_pow(a: Asym, e: f64) -> Asym {
    use Asym::*;
    if e == 0.0 {
        return Power { coef: 1.0, power: 0.0 };
    }
    match a {
        Power { coef, power } => {
            if coef > 0.0 {
                Power { coef: coef.powf(e), power: power * e }
            } else if coef != 0.0 && e.fract() == 0.0 {
                Power { coef: coef.powi(e as i32), power: power * e }
            } else {
                Unknown
            }
        }
        Bounded { lo, hi } => {
            if lo > 0.0 && e > 0.0 {
                Bounded { lo: lo.powf(e), hi: hi.powf(e) }
            } else if lo > 0.0 && e < 0.0 {
                Bounded { lo: hi.powf(e), hi: lo.powf(e) }
            } else {
                Unknown
            }
        }
        GrowsSuper => {
            if e > 0.0 {
                GrowsSuper
            } else {
                DecaysSuper
            }
        }
        DecaysSuper => {
            if e > 0.0 {
                DecaysSuper
            } else {
                GrowsSuper
            }
        }
        Unknown => Unknown,
    }
}

/// Does `int f(x)^(-q) dx` diverge towards the given direction?
/// `None` when the formula tree does not expose a decidable leading behaviour.
pub fn weight_integral_diverges(f: &Expr, q: f64, dir: Direction) -> Option<bool> {
    match f.asymptotics(dir) {
        Asym::Power { coef, power } => {
            if coef <= 0.0 {
                None // not a valid width at far field
            } else {
                Some(q * power <= 1.0)
            }
        }
        Asym::Bounded { lo, .. } => {
            if lo > 0.0 {
                Some(true) // f bounded above and below: integrand bounded below
            } else {
                None
            }
        }
        Asym::GrowsSuper => Some(false),
        Asym::DecaysSuper | Asym::Unknown => None,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(w, "{c}"),
            Expr::Var => write!(w, "x"),
            Expr::Add(a, b) => write!(w, "({a} + {b})"),
            Expr::Sub(a, b) => write!(w, "({a} - {b})"),
            Expr::Mul(a, b) => write!(w, "({a} * {b})"),
            Expr::Div(a, b) => write!(w, "({a} / {b})"),
            Expr::Pow(a, b) => write!(w, "pow({a}, {b})"),
            Expr::Neg(a) => write!(w, "(-{a})"),
            Expr::Call(f, a) => {
                let name = match f {
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Exp => "exp",
                    Func::Tanh => "tanh",
                    Func::Smoothstep => "smoothstep",
                };
                write!(w, "{name}({a})")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn parse_all(mut self) -> Result<Expr, ExprError> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.err("trailing input"));
        }
        Ok(e)
    }

    fn err(&self, msg: &str) -> ExprError {
        ExprError::Parse { at: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let e = self.factor()?; // right associative
            return Ok(Expr::Pow(Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                // exponentiation binds tighter: -x^2 = -(x^2)
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.err("expected a number, identifier or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        let mut seen_e = false;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let ok = c.is_ascii_digit()
                || c == b'.'
                || c == b'e'
                || c == b'E'
                || (seen_e && (c == b'+' || c == b'-') && matches!(self.src[self.pos - 1], b'e' | b'E'));
            if !ok {
                break;
            }
            if c == b'e' || c == b'E' {
                if seen_e {
                    break;
                }
                seen_e = true;
            }
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ExprError::Parse { at: start, msg: format!("bad number `{text}`") })
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        match name.as_str() {
            "x" | "t" => Ok(Expr::Var),
            "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            "pow" => {
                if self.peek() != Some(b'(') {
                    return Err(self.err("pow expects `(`"));
                }
                self.pos += 1;
                let a = self.expr()?;
                if self.peek() != Some(b',') {
                    return Err(self.err("pow expects two arguments"));
                }
                self.pos += 1;
                let b = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(Expr::Pow(Box::new(a), Box::new(b)))
            }
            "sin" | "cos" | "exp" | "tanh" | "smoothstep" => {
                let f = match name.as_str() {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "tanh" => Func::Tanh,
                    _ => Func::Smoothstep,
                };
                if self.peek() != Some(b'(') {
                    return Err(self.err("function expects `(`"));
                }
                self.pos += 1;
                let a = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(Expr::Call(f, Box::new(a)))
            }
            _ => Err(ExprError::UnknownIdent(name)),
        }
    }
}
