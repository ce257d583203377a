//! Line-oriented operation traces.
//!
//! ```text
//! wcheap-trace v1 seed=7 variant=full
//! ins 5
//! ins 3
//! deckey 0 1
//! meld 0 9 4
//! delmin
//! peek
//! ```
//!
//! `deckey` names its target by insertion index; values inserted by a
//! `meld` segment consume insertion indices in order.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::structure::Variant;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Insert(i64),
    DeleteMin,
    DecreaseKey { index: usize, value: i64 },
    /// Builds a separate heap from `values` and melds it in.
    Meld { segment: u64, values: Vec<i64> },
    FindMin,
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Insert(_) => "ins",
            Op::DeleteMin => "delmin",
            Op::DecreaseKey { .. } => "deckey",
            Op::Meld { .. } => "meld",
            Op::FindMin => "peek",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Insert(v) => write!(f, "ins {v}"),
            Op::DeleteMin => f.write_str("delmin"),
            Op::DecreaseKey { index, value } => write!(f, "deckey {index} {value}"),
            Op::Meld { segment, values } => {
                write!(f, "meld {segment}")?;
                for v in values {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
            Op::FindMin => f.write_str("peek"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpTrace {
    pub seed: u64,
    pub variant: Variant,
    pub ops: Vec<Op>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TraceError {
    /// 1-based line in the trace file; the header is line 1.
    pub line: usize,
    pub message: String,
}

impl TraceError {
    pub(crate) fn at_op(op_index: usize, message: impl Into<String>) -> Self {
        TraceError {
            line: op_index + 2,
            message: message.into(),
        }
    }
}

fn canonical<T: FromStr + ToString>(tok: &str) -> Option<T> {
    let v: T = tok.parse().ok()?;
    (v.to_string() == tok).then_some(v)
}

impl OpTrace {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "wcheap-trace v1 seed={} variant={}", self.seed, self.variant.as_str()).unwrap();
        for op in &self.ops {
            writeln!(s, "{op}").unwrap();
        }
        s
    }

    /// Parses the canonical text form; anything `to_text` would not produce is rejected.
    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let err = |line: usize, m: &str| TraceError {
            line,
            message: m.to_string(),
        };
        let body = text.strip_suffix('\n').ok_or_else(|| err(1, "missing final newline"))?;
        let mut lines = body.split('\n');
        let header = lines.next().unwrap_or("");
        let rest = header
            .strip_prefix("wcheap-trace v1 seed=")
            .ok_or_else(|| err(1, "bad header"))?;
        let (seed, variant) = rest.split_once(" variant=").ok_or_else(|| err(1, "bad header"))?;
        let seed = canonical::<u64>(seed).ok_or_else(|| err(1, "bad seed"))?;
        let variant = match variant {
            "full" => Variant::Full,
            "simple" => Variant::Simplified,
            _ => return Err(err(1, "variant must be full or simple")),
        };
        let mut ops = Vec::new();
        for (i, line) in lines.enumerate() {
            let ln = i + 2;
            let toks: Vec<&str> = line.split(' ').collect();
            let int = |t: &str| canonical::<i64>(t).ok_or_else(|| err(ln, &format!("bad integer {t:?}")));
            let op = match toks.as_slice() {
                ["ins", v] => Op::Insert(int(v)?),
                ["delmin"] => Op::DeleteMin,
                ["peek"] => Op::FindMin,
                ["deckey", i, v] => Op::DecreaseKey {
                    index: canonical::<usize>(i).ok_or_else(|| err(ln, &format!("bad index {i:?}")))?,
                    value: int(v)?,
                },
                ["meld", seg, vals @ ..] => Op::Meld {
                    segment: canonical::<u64>(seg).ok_or_else(|| err(ln, &format!("bad segment id {seg:?}")))?,
                    values: vals.iter().map(|v| int(v)).collect::<Result<_, _>>()?,
                },
                _ => return Err(err(ln, &format!("unknown operation {line:?}"))),
            };
            ops.push(op);
        }
        Ok(OpTrace { seed, variant, ops })
    }
}
