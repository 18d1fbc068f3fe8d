// SPDX-License-Identifier: MIT OR Apache-2.0

//! Randomised self-check of the search against its oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{brute_force_segment, constrained_k_segment, dpdp_segment, CostTable, DurationPenalty, ORACLE_MAX_LEN};
use crate::error::{Error, Result};

/// Settings for [`oracle_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCheckConfig {
    /// Instances compared against exhaustive search.
    pub optimality_instances: usize,
    /// Instances compared against the fixed-count search.
    pub duality_instances: usize,
    /// Longest sequence drawn; at most the oracle limit.
    pub max_len: usize,
    /// λ is drawn uniformly from `[0, max_lambda]`.
    pub max_lambda: f64,
    pub seed: u64,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            optimality_instances: 200,
            duality_instances: 100,
            max_len: 10,
            max_lambda: 5.0,
            seed: 1,
        }
    }
}

/// Outcome of [`oracle_check`]; `failures` describes every mismatch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleCheckReport {
    pub optimality_checked: usize,
    pub duality_checked: usize,
    pub failures: Vec<String>,
}

impl OracleCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn random_table(rng: &mut ChaCha8Rng, len: usize, max_len: usize) -> CostTable {
    CostTable::from_fn(len, max_len, |_, _| rng.random_range(-5.0..5.0))
}

fn random_penalty(rng: &mut ChaCha8Rng, max_lambda: f64) -> Result<DurationPenalty> {
    let lambda = rng.random_range(0.0..=max_lambda);
    let penalty = match rng.random_range(0..3) {
        0 => DurationPenalty::linear(lambda),
        1 => DurationPenalty::gamma(lambda, rng.random_range(1.0..8.0), rng.random_range(0.5..2.0), 12)?,
        _ => DurationPenalty::none(),
    };
    let constant = if rng.random_bool(0.5) {
        DurationPenalty::geometric_segment_constant(rng.random_range(0.05..0.95))?
    } else {
        0.0
    };
    Ok(penalty.with_segment_constant(constant))
}

/// Checks on random instances that the DP reaches the exhaustive minimum
/// exactly, and that with a linear penalty the fixed-count search at the
/// DP's span count reaches the same segment-cost sum exactly.
pub fn oracle_check(config: &OracleCheckConfig) -> Result<OracleCheckReport> {
    if config.max_len == 0 || config.max_len > ORACLE_MAX_LEN {
        return Err(Error::InvalidConfig(format!(
            "max_len must be in 1..={ORACLE_MAX_LEN}, got {}",
            config.max_len
        )));
    }
    if !(config.max_lambda >= 0.0 && config.max_lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("max_lambda must be >= 0, got {}", config.max_lambda)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = OracleCheckReport::default();

    for i in 0..config.optimality_instances {
        let len = rng.random_range(1..=config.max_len);
        let max_seg = rng.random_range(1..=len);
        let table = random_table(&mut rng, len, max_seg);
        let penalty = random_penalty(&mut rng, config.max_lambda)?;
        let dp = dpdp_segment(&table, &penalty, max_seg);
        let bf = brute_force_segment(&table, &penalty, max_seg);
        match (dp, bf) {
            (Ok(dp), Ok(bf)) if dp.total_cost == bf.total_cost && dp.is_exact_cover(len) => {}
            (Err(_), Err(_)) => {}
            (dp, bf) => report.failures.push(format!(
                "optimality instance {i} (T={len}, max={max_seg}, {penalty:?}): dp {:?} vs brute force {:?}",
                dp.map(|s| s.total_cost),
                bf.map(|s| s.total_cost)
            )),
        }
        report.optimality_checked += 1;
    }

    for i in 0..config.duality_instances {
        let len = rng.random_range(1..=config.max_len);
        let max_seg = rng.random_range(1..=len);
        let table = random_table(&mut rng, len, max_seg);
        let lambda = rng.random_range(0.0..=config.max_lambda);
        let seg = dpdp_segment(&table, &DurationPenalty::linear(lambda), max_seg)?;
        let k = seg.num_spans();
        let fixed = constrained_k_segment(&table, k, max_seg)?;
        let sum = seg.segment_cost_sum(&table);
        if fixed.total_cost != sum || fixed.num_spans() != k {
            report.failures.push(format!(
                "duality instance {i} (T={len}, λ={lambda}, k={k}): fixed-count {} vs penalised {sum}",
                fixed.total_cost
            ));
        }
        report.duality_checked += 1;
    }
    Ok(report)
}
