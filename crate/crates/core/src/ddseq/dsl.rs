//! Text notation for pulse schedules.
//!
//! ```text
//! schedule := "[" item+ "]" ("^" (INT | "N"))? ;
//! item     := delay | pulse ;
//! delay    := "tau" ("/" INT)? | NUMBER unit ;
//! pulse    := "P(" phase ")" ;
//! phase    := "x" | "y" | "-x" | "-y" | NUMBER "deg" | NUMBER "rad" ;
//! unit     := "s" | "ms" | "us" ;
//! ```
//!
//! `tau` and `N` are parameters bound at compile time through
//! [`DslBindings`]. `#` starts a comment that runs to the end of the line.
//!
//! ```
//! use frozen_discord::ddseq::{compile_dsl, DslBindings};
//!
//! let s = compile_dsl("[tau/2 P(x) tau P(y) tau/2]^N", &DslBindings::new(1e-3, 10)).unwrap();
//! assert_eq!(s.pulses_per_cycle(), 2);
//! assert_eq!(s.repetitions, 10);
//! ```

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use thiserror::Error;

use super::{wrap_phase, PulseEvent, PulseSchedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("semantic error at {line}:{column}: {message}")]
    Semantic {
        line: usize,
        column: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DslBindings {
    pub tau: Option<f64>,
    pub repetitions: Option<u32>,
}

impl DslBindings {
    pub fn new(tau: f64, repetitions: u32) -> Self {
        DslBindings {
            tau: Some(tau),
            repetitions: Some(repetitions),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LBracket,
    RBracket,
    LParen,
    RParen,
    Caret,
    Slash,
    Minus,
    Number(f64, String),
    Ident(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let push = |tok, tokens: &mut Vec<Token>| {
            tokens.push(Token {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '^' => Some(Tok::Caret),
            '/' => Some(Tok::Slash),
            _ => None,
        };
        if let Some(tok) = single {
            push(tok, &mut tokens);
            i += 1;
            col += 1;
            continue;
        }
        let starts_number = |k: usize| k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.');
        if (c == '-' || c == '+') && starts_number(i + 1) || starts_number(i) {
            let begin = i;
            if c == '-' || c == '+' {
                i += 1;
            }
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent only when followed by digits, so "1e" is not consumed
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '-' || chars[k] == '+') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lexeme: String = chars[begin..i].iter().collect();
            let value = lexeme.parse::<f64>().map_err(|_| DslError::Syntax {
                line: start_line,
                column: start_col,
                message: format!("malformed number `{lexeme}`"),
            })?;
            col += i - begin;
            push(Tok::Number(value, lexeme), &mut tokens);
            continue;
        }
        if c == '-' {
            push(Tok::Minus, &mut tokens);
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            col += i - begin;
            push(Tok::Ident(word), &mut tokens);
            continue;
        }
        return Err(DslError::Syntax {
            line,
            column: col,
            message: format!("unexpected character `{c}`"),
        });
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    bindings: &'a DslBindings,
    end: (usize, usize),
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.column)).unwrap_or(self.end)
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, DslError> {
        let (line, column) = self.here();
        Err(DslError::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn semantic<T>(at: &Token, message: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Semantic {
            line: at.line,
            column: at.column,
            message: message.into(),
        })
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, DslError> {
        match self.peek() {
            Some(t) if t.tok == want => Ok(self.next().unwrap()),
            Some(t) => {
                let found = describe(&t.tok);
                self.syntax(format!("expected {what}, found {found}"))
            }
            None => self.syntax(format!("expected {what}, found end of input")),
        }
    }

    fn integer(&mut self, what: &str) -> Result<(u64, Token), DslError> {
        match self.peek().cloned() {
            Some(
                t @ Token {
                    tok: Tok::Number(v, _), ..
                },
            ) => {
                if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
                    return self.syntax(format!("expected {what} (a non-negative integer)"));
                }
                self.pos += 1;
                Ok((v as u64, t))
            }
            _ => self.syntax(format!("expected {what}")),
        }
    }

    fn schedule(&mut self) -> Result<PulseSchedule, DslError> {
        self.expect(Tok::LBracket, "`[`")?;
        let mut events = Vec::new();
        while !matches!(self.peek().map(|t| &t.tok), Some(Tok::RBracket) | None) {
            events.push(self.item()?);
        }
        if events.is_empty() {
            return self.syntax("a schedule needs at least one item");
        }
        self.expect(Tok::RBracket, "`]`")?;

        let mut repetitions = 1u32;
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Caret)) {
            self.pos += 1;
            let at = self.peek().cloned();
            repetitions = match at.as_ref().map(|t| &t.tok) {
                Some(Tok::Ident(name)) if name == "N" => {
                    self.pos += 1;
                    match self.bindings.repetitions {
                        Some(n) => n,
                        None => return Self::semantic(at.as_ref().unwrap(), "repetition count `N` is not bound"),
                    }
                }
                _ => self.integer("repetition count")?.0 as u32,
            };
            if repetitions == 0 {
                let tok = at.unwrap();
                return Self::semantic(&tok, "repetition count must be at least 1");
            }
        }
        if self.peek().is_some() {
            return self.syntax("unexpected input after schedule");
        }
        Ok(PulseSchedule {
            name: "custom".into(),
            tau: self.bindings.tau,
            events,
            repetitions,
        })
    }

    fn item(&mut self) -> Result<PulseEvent, DslError> {
        let tok = self.peek().cloned().expect("caller checked for input");
        match &tok.tok {
            Tok::Ident(w) if w == "tau" => {
                self.pos += 1;
                let tau = match self.bindings.tau {
                    Some(tau) => tau,
                    None => return Self::semantic(&tok, "`tau` is not bound"),
                };
                if matches!(self.peek().map(|t| &t.tok), Some(Tok::Slash)) {
                    self.pos += 1;
                    let (div, at) = self.integer("divisor")?;
                    if div == 0 {
                        return Self::semantic(&at, "division by zero");
                    }
                    Ok(PulseEvent::delay(tau / div as f64))
                } else {
                    Ok(PulseEvent::delay(tau))
                }
            }
            Tok::Ident(w) if w == "P" => {
                self.pos += 1;
                self.expect(Tok::LParen, "`(`")?;
                let phase = self.phase()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(PulseEvent::pi(phase))
            }
            Tok::Number(v, _) => {
                let v = *v;
                self.pos += 1;
                let scale = match self.next().map(|t| t.tok) {
                    Some(Tok::Ident(u)) if u == "s" => 1.0,
                    Some(Tok::Ident(u)) if u == "ms" => 1e-3,
                    Some(Tok::Ident(u)) if u == "us" => 1e-6,
                    _ => {
                        self.pos -= 1;
                        return self.syntax("expected a time unit (s, ms, us)");
                    }
                };
                if !(v >= 0.0) {
                    return Self::semantic(&tok, format!("negative delay {v}"));
                }
                Ok(PulseEvent::delay(v * scale))
            }
            other => {
                let found = describe(other);
                self.syntax(format!("expected a delay or pulse, found {found}"))
            }
        }
    }

    fn phase(&mut self) -> Result<f64, DslError> {
        let tok = match self.peek().cloned() {
            Some(t) => t,
            None => return self.syntax("expected a phase"),
        };
        match tok.tok {
            Tok::Ident(ref w) if w == "x" => {
                self.pos += 1;
                Ok(0.0)
            }
            Tok::Ident(ref w) if w == "y" => {
                self.pos += 1;
                Ok(FRAC_PI_2)
            }
            Tok::Minus => {
                self.pos += 1;
                match self.peek().map(|t| t.tok.clone()) {
                    Some(Tok::Ident(w)) if w == "x" => {
                        self.pos += 1;
                        Ok(PI)
                    }
                    Some(Tok::Ident(w)) if w == "y" => {
                        self.pos += 1;
                        Ok(3.0 * FRAC_PI_2)
                    }
                    _ => self.syntax("unknown phase token after `-` (expected x or y)"),
                }
            }
            Tok::Number(v, _) => {
                self.pos += 1;
                match self.peek().map(|t| t.tok.clone()) {
                    Some(Tok::Ident(u)) if u == "deg" => {
                        self.pos += 1;
                        Ok(wrap_phase(v.to_radians()))
                    }
                    Some(Tok::Ident(u)) if u == "rad" => {
                        self.pos += 1;
                        Ok(wrap_phase(v))
                    }
                    _ => self.syntax("expected `deg` or `rad` after a numeric phase"),
                }
            }
            ref other => {
                let found = describe(other);
                self.syntax(format!("unknown phase token {found}"))
            }
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Caret => "`^`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Number(_, s) => format!("number `{s}`"),
        Tok::Ident(s) => format!("`{s}`"),
    }
}

/// Parses a schedule with no parameters bound.
pub fn parse_dsl(text: &str) -> Result<PulseSchedule, DslError> {
    compile_dsl(text, &DslBindings::default())
}

pub fn compile_dsl(text: &str, bindings: &DslBindings) -> Result<PulseSchedule, DslError> {
    let tokens = lex(text)?;
    let last_line = text.lines().count().max(1);
    let last_col = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    let mut parser = Parser {
        tokens,
        pos: 0,
        bindings,
        end: (last_line, last_col),
    };
    parser.schedule()
}

/// Canonical text form. Delays equal to `tau/k` (k ≤ 64) are written
/// symbolically, everything else in seconds with round-trip precision.
pub fn print_dsl(s: &PulseSchedule) -> String {
    let mut out = String::from("[");
    for (k, e) in s.events.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        match *e {
            PulseEvent::Delay { duration } => out.push_str(&format_delay(duration, s.tau)),
            PulseEvent::Pulse { phase, .. } => {
                let p = if phase == 0.0 {
                    "x".to_string()
                } else if phase == FRAC_PI_2 {
                    "y".to_string()
                } else if phase == PI {
                    "-x".to_string()
                } else if phase == 3.0 * FRAC_PI_2 {
                    "-y".to_string()
                } else {
                    format!("{phase:?}rad")
                };
                let _ = write!(out, "P({p})");
            }
        }
    }
    let _ = write!(out, "]^{}", s.repetitions.max(1));
    out
}

fn format_delay(d: f64, tau: Option<f64>) -> String {
    if let Some(tau) = tau {
        if d == tau {
            return "tau".into();
        }
        if let Some(k) = (2..=64u32).find(|&k| d == tau / k as f64) {
            return format!("tau/{k}");
        }
    }
    format!("{d:?}s")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddseq::{builtin_sequence, SequenceKind};

    const XY4_TEXT: &str = "[tau/2 P(x) tau P(y) tau P(x) tau P(y) tau/2]^N";

    #[test]
    fn xy4_text_matches_builtin() {
        let tau = 0.58e-3;
        let parsed = compile_dsl(XY4_TEXT, &DslBindings::new(tau, 5)).unwrap();
        let builtin = builtin_sequence(SequenceKind::XY4S, tau).unwrap().with_repetitions(5);
        assert_eq!(parsed.events, builtin.events);
        assert_eq!(parsed.repetitions, 5);
        assert_eq!(parsed.tau, Some(tau));
    }

    #[test]
    fn single_delay() {
        let s = compile_dsl("[tau/2]^1", &DslBindings::new(1e-3, 1)).unwrap();
        assert_eq!(s.events, vec![PulseEvent::delay(0.5e-3)]);
        assert_eq!(s.pulses_per_cycle(), 0);
    }

    #[test]
    fn unknown_phase_token() {
        let err = compile_dsl("[tau/2 P(q)]", &DslBindings::new(1e-3, 1)).unwrap_err();
        assert!(
            matches!(
                err,
                DslError::Syntax {
                    line: 1,
                    column: 10,
                    ..
                }
            ),
            "{err}"
        );
        let err = parse_dsl("[1ms P(-z)]").unwrap_err();
        assert!(matches!(err, DslError::Syntax { .. }));
    }

    #[test]
    fn literal_units_and_phases() {
        let s = parse_dsl("[0.5ms P(90deg) 250 us P(-x)\n  1e-4 s P(0.25rad) 0s]^3").unwrap();
        assert_eq!(s.repetitions, 3);
        let d = s.delays();
        assert!((d[0] - 0.5e-3).abs() < 1e-18);
        assert!((d[1] - 250e-6).abs() < 1e-18);
        assert!((d[2] - 1e-4).abs() < 1e-18);
        assert_eq!(d[3], 0.0);
        let p = s.phases();
        assert!((p[0] - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(p[1], PI);
        assert_eq!(p[2], 0.25);
    }

    #[test]
    fn negative_phase_wraps() {
        let s = parse_dsl("[P(-90deg)]").unwrap();
        assert!((s.phases()[0] - 3.0 * FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn semantic_errors() {
        let err = parse_dsl("[1ms -2ms]").unwrap_err();
        assert!(matches!(err, DslError::Semantic { line: 1, column: 6, .. }), "{err}");
        assert!(matches!(parse_dsl("[tau]"), Err(DslError::Semantic { .. })));
        assert!(matches!(parse_dsl("[1ms]^N"), Err(DslError::Semantic { .. })));
        assert!(matches!(parse_dsl("[1ms]^0"), Err(DslError::Semantic { .. })));
        let b = DslBindings::new(1e-3, 1);
        assert!(matches!(compile_dsl("[tau/0]", &b), Err(DslError::Semantic { .. })));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_dsl("[1ms\n  P(x) 3 ]").unwrap_err();
        assert_eq!(
            err,
            DslError::Syntax {
                line: 2,
                column: 10,
                message: "expected a time unit (s, ms, us)".into()
            }
        );
        assert!(matches!(parse_dsl("[]"), Err(DslError::Syntax { .. })));
        assert!(matches!(parse_dsl("[1ms"), Err(DslError::Syntax { .. })));
        assert!(matches!(parse_dsl("[1ms] extra"), Err(DslError::Syntax { .. })));
        assert!(matches!(parse_dsl("[1ms]^2.5"), Err(DslError::Syntax { .. })));
        assert!(matches!(parse_dsl("[1ms & 2ms]"), Err(DslError::Syntax { .. })));
    }

    #[test]
    fn comments_are_ignored() {
        let s = parse_dsl("# spin echo\n[1ms P(x) 1ms] # one pulse\n").unwrap();
        assert_eq!(s.pulses_per_cycle(), 1);
    }

    #[test]
    fn builtins_round_trip_through_text() {
        for kind in SequenceKind::ALL {
            let tau = kind.experimental_tau();
            let s = builtin_sequence(kind, tau).unwrap().with_repetitions(4);
            let text = print_dsl(&s);
            let back = compile_dsl(
                &text,
                &DslBindings {
                    tau: Some(tau),
                    repetitions: None,
                },
            )
            .unwrap();
            assert_eq!(back.events, s.events, "{text}");
            assert_eq!(back.repetitions, 4);
        }
        let xy4 = builtin_sequence(SequenceKind::XY4S, 0.58e-3)
            .unwrap()
            .with_repetitions(5);
        assert_eq!(print_dsl(&xy4), "[tau/2 P(x) tau P(y) tau P(x) tau P(y) tau/2]^5");
    }

    proptest::proptest! {
        #[test]
        fn literal_schedules_round_trip(
            items in proptest::collection::vec((0.0f64..1e-2, 0.0f64..std::f64::consts::TAU, proptest::bool::ANY), 1..12),
            reps in 1u32..50,
        ) {
            let events: Vec<PulseEvent> = items.iter()
                .map(|&(d, p, is_pulse)| if is_pulse { PulseEvent::pi(p) } else { PulseEvent::delay(d) })
                .collect();
            let s = PulseSchedule { name: "custom".into(), tau: None, events, repetitions: reps };
            let back = parse_dsl(&print_dsl(&s)).unwrap();
            proptest::prop_assert_eq!(back.events, s.events);
            proptest::prop_assert_eq!(back.repetitions, reps);
        }
    }
}
