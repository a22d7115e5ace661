//! Built-in benchmark suite: four reference rational functions with known
//! closed forms, run end to end through the driver and checked
//! coefficient-exactly against their defining expressions.

use std::time::Instant;

use crate::driver::{reconstruct, DriverOptions, ReconstructionJob};
use crate::expr::Expression;
use crate::ffield::FieldElement;

/// A benchmark definition: expression text over a canonical variable list.
pub struct BenchSpec {
    pub name: &'static str,
    pub text: String,
    pub vars: Vec<String>,
}

fn zvars(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("z{i}")).collect()
}

const BIG_CONSTANT: &str = "123456789109898799879870980";

/// Looks up one of the four built-in benchmarks by name (f1..f4).
pub fn spec(name: &str) -> Option<BenchSpec> {
    let (text, n) = match name {
        "f1" => {
            let num = (1..=20)
                .map(|i| format!("z{i}^20"))
                .collect::<Vec<_>>()
                .join("+");
            let den = (1..=5)
                .map(|i| format!("(z1*z2+z3*z4+z5*z6)^{i}*z20^35"))
                .collect::<Vec<_>>()
                .join("+");
            (format!("({num})/({den})"), 20)
        }
        "f2" | "f3" => {
            let k = if name == "f2" { 17 } else { 20 };
            (
                format!(
                    "{BIG_CONSTANT}*((1+z1+z2+z3+z4+z5)^{k}-1)\
                     /(z4-z2+z1^10*z2^10*z3^10*z4^10*z5^10)"
                ),
                5,
            )
        }
        "f4" => (
            "(z1^100+z2^200+z3^300)/(z1*z2*z3*z4*z5+z1^4*z2^4*z3^4*z4^4*z5^4)".to_string(),
            5,
        ),
        _ => return None,
    };
    Some(BenchSpec {
        name: match name {
            "f1" => "f1",
            "f2" => "f2",
            "f3" => "f3",
            _ => "f4",
        },
        text,
        vars: zvars(n),
    })
}

/// Validates that `order` is a permutation of `vars` and returns it as the
/// new variable list.
pub fn permute_vars(vars: &[String], order: &[String]) -> Result<Vec<String>, String> {
    if order.len() != vars.len() {
        return Err(format!(
            "order lists {} variable(s), expected {}",
            order.len(),
            vars.len()
        ));
    }
    let mut sorted_a = vars.to_vec();
    let mut sorted_b = order.to_vec();
    sorted_a.sort();
    sorted_b.sort();
    if sorted_a != sorted_b {
        return Err("order is not a permutation of the variable list".into());
    }
    Ok(order.to_vec())
}

/// Outcome of running one expression through the full reconstruction.
pub struct RunReport {
    pub function: String,
    pub probes: usize,
    pub primes: usize,
    pub wall_ms: u128,
    pub seed: u64,
    pub verified: bool,
    /// For benchmark runs: whether the result is coefficient-identical to
    /// the defining expression (after canonical normalization).
    pub matched: Option<bool>,
}

/// Parses and reconstructs a single expression, optionally checking the
/// result against the expression's own symbolic expansion.
pub fn run_expression(
    text: &str,
    vars: &[String],
    options: &DriverOptions,
    tag: Option<String>,
    check_symbolic: bool,
) -> Result<RunReport, String> {
    let expr = Expression::parse(text, vars).map_err(|e| e.to_string())?;
    let job = ReconstructionJob::new(0, vars.len(), tag);
    let black_box = |point: &[FieldElement]| vec![expr.evaluate(point)];
    let start = Instant::now();
    let outcomes =
        reconstruct(std::slice::from_ref(&job), &black_box, options).map_err(|e| e.to_string())?;
    let wall_ms = start.elapsed().as_millis();
    let outcome = &outcomes[0];
    let matched = if check_symbolic {
        let expected = expr.to_rational_function().map_err(|e| e.to_string())?;
        Some(expected == outcome.function)
    } else {
        None
    };
    Ok(RunReport {
        function: outcome.function.render(vars),
        probes: outcome.probes,
        primes: outcome.primes,
        wall_ms,
        seed: outcome.seed,
        verified: outcome.verified,
        matched,
    })
}
