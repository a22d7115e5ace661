//! Versioned, line-oriented persistence of reconstruction progress: one
//! file per tag and prime counter, decimal arbitrary-precision integers,
//! one coefficient per line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;

use crate::polyint::MultiIndex;
use crate::ratrec::{CoefficientRace, ModularImage};

use super::job::{JobInner, Support};
use super::later::CoefKey;
use super::DriverError;

const FORMAT: &str = "ffrec-state 1";

fn err(msg: impl Into<String>) -> DriverError {
    DriverError::State(msg.into())
}

fn render_exps(m: &MultiIndex) -> String {
    m.0.iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_exps(s: &str, n: usize) -> Result<MultiIndex, DriverError> {
    let exps: Vec<u32> = s
        .split(',')
        .map(|x| x.parse().map_err(|_| err(format!("bad exponent {x:?}"))))
        .collect::<Result<_, _>>()?;
    if exps.len() != n {
        return Err(err("exponent tuple length mismatch"));
    }
    Ok(MultiIndex(exps))
}

fn render_guess(g: &Option<BigRational>) -> String {
    match g {
        None => "-".into(),
        Some(q) => format!("{}/{}", q.numer(), q.denom()),
    }
}

fn parse_guess(s: &str) -> Result<Option<BigRational>, DriverError> {
    if s == "-" {
        return Ok(None);
    }
    let (n, d) = s.split_once('/').ok_or_else(|| err("bad rational"))?;
    let n: BigInt = n.parse().map_err(|_| err("bad rational numerator"))?;
    let d: BigInt = d.parse().map_err(|_| err("bad rational denominator"))?;
    Ok(Some(BigRational::new(n, d)))
}

/// Writes the job's cross-prime state after a completed prime (or on
/// completion). No-op without a tag.
pub(crate) fn save(inner: &JobInner) -> Result<(), DriverError> {
    let (Some(tag), Some(dir)) = (&inner.tag, &inner.save_dir) else {
        return Ok(());
    };
    let Some(support) = &inner.support else {
        return Ok(());
    };
    let mut out = String::new();
    let push = |out: &mut String, line: &str| {
        out.push_str(line);
        out.push('\n');
    };
    push(&mut out, FORMAT);
    push(&mut out, &format!("tag {tag}"));
    push(&mut out, &format!("vars {}", inner.n));
    push(&mut out, &format!("seed {}", inner.base_seed));
    push(&mut out, &format!("safe {}", inner.safe as u8));
    push(
        &mut out,
        &format!(
            "status {}",
            if inner.result.is_some() {
                "done"
            } else {
                "active"
            }
        ),
    );
    push(&mut out, &format!("probes {}", inner.probes));
    push(&mut out, &format!("primes_touched {}", inner.primes_touched));
    push(
        &mut out,
        &format!(
            "folded {}",
            inner
                .folded_primes
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
    );
    match &inner.shift {
        None => push(&mut out, "shift -"),
        Some(s) => push(
            &mut out,
            &format!(
                "shift {}",
                s.iter()
                    .map(|v| v.val().to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        ),
    }
    push(&mut out, &format!("norm {}", render_exps(support.norm())));
    push(&mut out, &format!("coeffs {}", inner.races.len()));
    for ((is_num, m), race) in &inner.races {
        let side = if *is_num { "num" } else { "den" };
        let (res, modulus) = match &race.image {
            Some(img) => (img.residue.to_string(), img.modulus.to_string()),
            None => ("-".into(), "-".into()),
        };
        let mut line = String::new();
        write!(
            line,
            "{side} {} {res} {modulus} {} {}",
            render_exps(m),
            race.accepted as u8,
            render_guess(&race.guess)
        )
        .unwrap();
        push(&mut out, &line);
    }
    std::fs::create_dir_all(dir).map_err(|e| err(format!("creating {dir:?}: {e}")))?;
    let path = dir.join(format!("{}_{}.txt", tag, inner.folded_primes.len()));
    std::fs::write(&path, out).map_err(|e| err(format!("writing {path:?}: {e}")))?;
    Ok(())
}

pub(crate) struct SavedState {
    pub tag: String,
    pub n: usize,
    pub base_seed: u64,
    pub safe: bool,
    pub done: bool,
    pub probes: usize,
    pub primes_touched: usize,
    pub folded_primes: Vec<usize>,
    pub shift: Option<Vec<u64>>,
    pub support: Support,
    pub races: BTreeMap<CoefKey, CoefficientRace>,
}

/// Parses a state file; refuses malformed or version-mismatched input.
pub(crate) fn load(path: &Path) -> Result<SavedState, DriverError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| err(format!("reading {path:?}: {e}")))?;
    let mut lines = text.lines();
    if lines.next() != Some(FORMAT) {
        return Err(err("unsupported state file version"));
    }
    let mut field = |name: &str| -> Result<String, DriverError> {
        let line = lines.next().ok_or_else(|| err("truncated state file"))?;
        line.strip_prefix(name)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_owned)
            .ok_or_else(|| err(format!("expected {name:?} line")))
    };
    let tag = field("tag")?;
    let n: usize = field("vars")?.parse().map_err(|_| err("bad vars"))?;
    let base_seed: u64 = field("seed")?.parse().map_err(|_| err("bad seed"))?;
    let safe = field("safe")? == "1";
    let done = match field("status")?.as_str() {
        "done" => true,
        "active" => false,
        other => return Err(err(format!("bad status {other:?}"))),
    };
    let probes: usize = field("probes")?.parse().map_err(|_| err("bad probes"))?;
    let primes_touched: usize = field("primes_touched")?
        .parse()
        .map_err(|_| err("bad primes_touched"))?;
    let folded_raw = field("folded")?;
    let folded_primes: Vec<usize> = if folded_raw.is_empty() {
        Vec::new()
    } else {
        folded_raw
            .split(',')
            .map(|x| x.parse().map_err(|_| err("bad folded prime index")))
            .collect::<Result<_, _>>()?
    };
    let shift_raw = field("shift")?;
    let shift = if shift_raw == "-" {
        None
    } else {
        Some(
            shift_raw
                .split(',')
                .map(|x| x.parse().map_err(|_| err("bad shift component")))
                .collect::<Result<Vec<u64>, _>>()?,
        )
    };
    let norm = parse_exps(&field("norm")?, n)?;
    let count: usize = field("coeffs")?.parse().map_err(|_| err("bad coeffs"))?;

    let mut races = BTreeMap::new();
    let mut num_support = Vec::new();
    let mut den_support = vec![norm];
    for _ in 0..count {
        let line = lines.next().ok_or_else(|| err("truncated coefficients"))?;
        let parts: Vec<&str> = line.split(' ').collect();
        if parts.len() != 6 {
            return Err(err(format!("bad coefficient line {line:?}")));
        }
        let is_num = match parts[0] {
            "num" => true,
            "den" => false,
            other => return Err(err(format!("bad side {other:?}"))),
        };
        let m = parse_exps(parts[1], n)?;
        let image = if parts[2] == "-" {
            None
        } else {
            let residue: BigUint = parts[2].parse().map_err(|_| err("bad residue"))?;
            let modulus: BigUint = parts[3].parse().map_err(|_| err("bad modulus"))?;
            Some(ModularImage::new(residue, modulus))
        };
        let accepted = parts[4] == "1";
        let guess = parse_guess(parts[5])?;
        if is_num {
            num_support.push(m.clone());
        } else {
            den_support.push(m.clone());
        }
        races.insert((is_num, m), CoefficientRace::from_saved(image, guess, accepted));
    }
    num_support.sort();
    den_support.sort();
    Ok(SavedState {
        tag,
        n,
        base_seed,
        safe,
        done,
        probes,
        primes_touched,
        folded_primes,
        shift,
        support: Support {
            num: num_support,
            den: den_support,
        },
        races,
    })
}
