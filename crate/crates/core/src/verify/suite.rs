//! Named test suites, the acceptance criteria and deterministic report
//! merging.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use super::identities::{self, check_identity, IdentityId};
use super::limits::{check_limit, LimitId};
use super::theorems::{
    check_chain_identity, check_remark_kernel, check_theorem_jacobi, check_theorem_kernel,
    JacobiForm,
};
use super::TestReport;
use crate::ensembles::{
    sample_batch, sample_jacobi_multilevel, sample_wishart_multilevel, write_csv, JacobiParams,
    MultilevelSample, WishartParams,
};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub const KERNEL_SAMPLES: usize = 100_000;
pub const JACOBI_SAMPLES: usize = 100_000;
pub const REMARK_POINTS: usize = 1_000;
pub const PUSHFORWARD_CONFIGS: usize = 1_000;
pub const CHAIN_POINTS: usize = 200;
pub const INTERLACING_DRAWS: usize = 10_000;
pub const DETERMINISM_DRAWS: usize = 500;

type Runner = Box<dyn Fn(u64) -> Result<TestReport> + Send + Sync>;

/// One runnable check. The runner receives the test's own seed.
pub struct SuiteTest {
    pub id: String,
    run: Runner,
}

impl SuiteTest {
    pub fn new(
        id: impl Into<String>,
        run: impl Fn(u64) -> Result<TestReport> + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            run: Box::new(run),
        }
    }

    /// Runs with `derive_seed(seed, id)`. Errors become failing reports.
    pub fn run(&self, seed: u64) -> TestReport {
        let own = derive_seed(seed, &self.id);
        let start = Instant::now();
        let mut r = match (self.run)(own) {
            Ok(r) => r,
            Err(e) => TestReport::tolerance_test(&self.id, "error", f64::NAN, 0.0, 0)
                .with_detail(format!("error: {e}")),
        };
        r.test_id = self.id.clone();
        r.seed = Some(own);
        r.runtime_secs = start.elapsed().as_secs_f64();
        r
    }
}

impl fmt::Debug for SuiteTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SuiteTest").field("id", &self.id).finish()
    }
}

/// An acceptance criterion: passes iff every one of its tests passes.
#[derive(Debug)]
pub struct Criterion {
    pub number: usize,
    pub title: &'static str,
    pub tests: Vec<SuiteTest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Acceptance,
    Identities,
    Limits,
    Theorems,
    Invariants,
    All,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Acceptance,
        Suite::Identities,
        Suite::Limits,
        Suite::Theorems,
        Suite::Invariants,
        Suite::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Acceptance => "acceptance",
            Suite::Identities => "identities",
            Suite::Limits => "limits",
            Suite::Theorems => "theorems",
            Suite::Invariants => "invariants",
            Suite::All => "all",
        }
    }

    pub fn tests(self) -> Vec<SuiteTest> {
        let mut tests = match self {
            Suite::Acceptance => acceptance_criteria()
                .into_iter()
                .flat_map(|c| c.tests)
                .collect(),
            Suite::Identities => IdentityId::ALL
                .into_iter()
                .map(|id| {
                    SuiteTest::new(format!("identity/{id}"), move |seed| {
                        check_identity(id, seed)
                    })
                })
                .collect(),
            Suite::Limits => limit_tests(),
            Suite::Theorems => theorem_tests(),
            Suite::Invariants => invariant_tests(),
            Suite::All => {
                let mut all: Vec<SuiteTest> =
                    [Suite::Acceptance, Suite::Identities, Suite::Theorems]
                        .into_iter()
                        .flat_map(|s| s.tests())
                        .collect();
                all.sort_by(|a, b| a.id.cmp(&b.id));
                all.dedup_by(|a, b| a.id == b.id);
                all
            }
        };
        tests.sort_by(|a, b| a.id.cmp(&b.id));
        tests
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown suite '{s}'")))
    }
}

/// Runs `tests` in parallel and returns reports in test-id order.
pub fn run_tests(tests: &[SuiteTest], seed: u64) -> Vec<TestReport> {
    let mut reports: Vec<TestReport> = tests.par_iter().map(|t| t.run(seed)).collect();
    reports.sort_by(|a, b| a.test_id.cmp(&b.test_id));
    reports
}

/// One JSON object per report and line.
pub fn write_report_rows<W: Write>(reports: &[TestReport], mut out: W) -> Result<()> {
    for r in reports {
        let line = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(())
}

/// Fixed-width table: verdict, id, statistic, p-value or tolerance, runtime.
pub fn summary_table(reports: &[TestReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.test_id.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut s = format!(
        "{:<4}  {:<width$}  {:>12}  {:>12}  {:>9}\n",
        "", "test", "statistic", "p / tol", "secs"
    );
    for r in reports {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        let third = match r.p_value {
            Some(p) => format!("p={p:.3e}"),
            None => format!("≤{:.1e}", r.threshold),
        };
        s.push_str(&format!(
            "{verdict:<4}  {:<width$}  {:>12.4e}  {:>12}  {:>9.2}\n",
            r.test_id, r.statistic, third, r.runtime_secs
        ));
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    s.push_str(&format!("{} tests, {failed} failed\n", reports.len()));
    s
}

fn kernel_params(beta: u32) -> WishartParams {
    WishartParams::new(beta, vec![1.0, 1.6], vec![0.5, 0.2, 0.8]).expect("valid parameters")
}

fn chain_params(beta: u32, n: usize) -> WishartParams {
    let pi = [1.0, 1.6][..n].to_vec();
    WishartParams::new(beta, pi, vec![0.5, 0.2]).expect("valid parameters")
}

fn kernel_test(beta: u32) -> SuiteTest {
    SuiteTest::new(format!("theorem/kernel-beta{beta}-n2-m2"), move |seed| {
        check_theorem_kernel(&kernel_params(beta), 2, KERNEL_SAMPLES, seed)
    })
}

fn jacobi_test(beta: u32, a: usize, n: usize, m: usize, form: JacobiForm) -> SuiteTest {
    let suffix = match form {
        JacobiForm::Used => "",
        JacobiForm::AsPrinted => "-as-printed",
    };
    SuiteTest::new(
        format!("theorem/jacobi-beta{beta}-A{a}-n{n}-m{m}{suffix}"),
        move |seed| {
            check_theorem_jacobi(
                &JacobiParams::new(beta, a, n, m)?,
                form,
                JACOBI_SAMPLES,
                seed,
            )
        },
    )
}

fn chain_test(beta: u32, n: usize) -> SuiteTest {
    SuiteTest::new(format!("theorem/chain-beta{beta}-n{n}-m2"), move |seed| {
        check_chain_identity(&chain_params(beta, n), 2, CHAIN_POINTS, seed)
    })
}

fn identity_test(id: &str, f: fn() -> Result<TestReport>) -> SuiteTest {
    SuiteTest::new(format!("identity/{id}"), move |_| f())
}

fn limit_tests() -> Vec<SuiteTest> {
    LimitId::ALL
        .into_iter()
        .map(|id| {
            SuiteTest::new(format!("limit/{id}"), move |_| {
                check_limit(id, &id.default_eps())
            })
        })
        .collect()
}

fn theorem_tests() -> Vec<SuiteTest> {
    let mut t = vec![
        kernel_test(1),
        kernel_test(2),
        SuiteTest::new("theorem/kernel-standard-n2-m2", |seed| {
            check_remark_kernel(2, 2, REMARK_POINTS, seed)
        }),
        jacobi_test(2, 4, 3, 1, JacobiForm::Used),
        jacobi_test(2, 4, 2, 2, JacobiForm::Used),
        jacobi_test(1, 5, 3, 1, JacobiForm::AsPrinted),
        jacobi_test(1, 5, 2, 2, JacobiForm::AsPrinted),
        jacobi_test(1, 5, 3, 1, JacobiForm::Used),
        jacobi_test(1, 5, 2, 2, JacobiForm::Used),
    ];
    for beta in [1, 2] {
        for n in [1, 2] {
            t.push(chain_test(beta, n));
        }
    }
    t
}

fn invariant_tests() -> Vec<SuiteTest> {
    vec![
        SuiteTest::new("invariant/interlacing", |seed| {
            check_interlacing(INTERLACING_DRAWS, seed)
        }),
        SuiteTest::new("invariant/csv-determinism", |seed| {
            check_csv_determinism(DETERMINISM_DRAWS, seed)
        }),
    ]
}

/// The acceptance criteria in order.
pub fn acceptance_criteria() -> Vec<Criterion> {
    let hciz_c = SuiteTest::new("identity/hciz-complex", identities::check_hciz_complex);
    let hciz_r = SuiteTest::new("identity/hciz-real", identities::check_hciz_real);
    vec![
        Criterion {
            number: 1,
            title: "HCIZ three-route agreement (β = 2)",
            tests: vec![hciz_c],
        },
        Criterion {
            number: 2,
            title: "HCIZ real case (β = 1)",
            tests: vec![hciz_r],
        },
        Criterion {
            number: 3,
            title: "Bessel and Heckman-Opdam Cauchy identities",
            tests: vec![
                identity_test("cauchy-mvb", identities::check_cauchy_mvb),
                identity_test("cauchy-ho", identities::check_cauchy_ho),
            ],
        },
        Criterion {
            number: 4,
            title: "β = 1 Wishart transition kernel",
            tests: vec![
                kernel_test(1),
                SuiteTest::new("theorem/kernel-standard-n2-m2", |seed| {
                    check_remark_kernel(2, 2, REMARK_POINTS, seed)
                }),
            ],
        },
        Criterion {
            number: 5,
            title: "β = 2 Wishart transition kernel",
            tests: vec![kernel_test(2)],
        },
        Criterion {
            number: 6,
            title: "β = 2 Jacobi corner densities",
            tests: vec![
                jacobi_test(2, 4, 3, 1, JacobiForm::Used),
                jacobi_test(2, 4, 2, 2, JacobiForm::Used),
            ],
        },
        Criterion {
            number: 7,
            title: "β = 1 Jacobi corner densities",
            tests: vec![
                jacobi_test(1, 5, 3, 1, JacobiForm::AsPrinted),
                jacobi_test(1, 5, 2, 2, JacobiForm::AsPrinted),
            ],
        },
        Criterion {
            number: 8,
            title: "Jacobi to Heckman-Opdam pushforward",
            tests: vec![SuiteTest::new("identity/jacobi-ho-pushforward", |seed| {
                identities::check_pushforward(PUSHFORWARD_CONFIGS, seed)
            })],
        },
        Criterion {
            number: 9,
            title: "kernel chain equals the joint density",
            tests: vec![
                chain_test(1, 1),
                chain_test(1, 2),
                chain_test(2, 1),
                chain_test(2, 2),
            ],
        },
        Criterion {
            number: 10,
            title: "truncated Macdonald Cauchy identity",
            tests: vec![identity_test("mac-cauchy", identities::check_mac_cauchy)],
        },
        Criterion {
            number: 11,
            title: "limit lemmas",
            tests: limit_tests(),
        },
        Criterion {
            number: 12,
            title: "invariants: interlacing, Bessel identities, determinism",
            tests: vec![
                SuiteTest::new("invariant/interlacing", |seed| {
                    check_interlacing(INTERLACING_DRAWS, seed)
                }),
                identity_test("bessel-symmetry", identities::check_bessel_symmetry),
                identity_test("bessel-scaling", identities::check_bessel_scaling),
                identity_test(
                    "bessel-normalization",
                    identities::check_bessel_normalization,
                ),
                SuiteTest::new("invariant/csv-determinism", |seed| {
                    check_csv_determinism(DETERMINISM_DRAWS, seed)
                }),
            ],
        },
    ]
}

/// Model configurations with `n, m ≤ 4` used by the invariant checks.
fn invariant_models() -> Vec<(
    String,
    Box<dyn Fn(&mut crate::rng::Rng) -> Result<MultilevelSample> + Sync>,
)> {
    let mut out: Vec<(
        String,
        Box<dyn Fn(&mut crate::rng::Rng) -> Result<MultilevelSample> + Sync>,
    )> = Vec::new();
    for beta in [1u32, 2] {
        for n in [1usize, 2, 4] {
            let pi = [1.0, 1.5, 0.7, 2.2][..n].to_vec();
            let p =
                WishartParams::new(beta, pi, vec![0.0, 0.3, 0.6, 0.9]).expect("valid parameters");
            out.push((
                format!("wishart β={beta} n={n}"),
                Box::new(move |rng| sample_wishart_multilevel(&p, 4, rng)),
            ));
        }
        let p = JacobiParams::new(beta, 6, 4, 4).expect("valid parameters");
        out.push((
            format!("jacobi β={beta} A=6 n=4"),
            Box::new(move |rng| sample_jacobi_multilevel(&p, rng)),
        ));
    }
    out
}

/// Counts non-interlacing or unsorted multilevel draws.
pub fn check_interlacing(draws: usize, seed: u64) -> Result<TestReport> {
    let mut bad = 0usize;
    let mut total = 0usize;
    let mut parts = Vec::new();
    for (label, draw) in invariant_models() {
        let xs = sample_batch(draws, derive_seed(seed, &label), draw)?;
        let here = xs
            .iter()
            .filter(|s| {
                !s.is_interlacing()
                    || s.levels
                        .iter()
                        .any(|l| l.values().windows(2).any(|w| w[0] < w[1]))
            })
            .count();
        bad += here;
        total += xs.len();
        parts.push(format!("{label}: {here}"));
    }
    Ok(TestReport::tolerance_test(
        "invariant/interlacing",
        "violations",
        bad as f64,
        0.0,
        total,
    )
    .with_detail(parts.join("; ")))
}

fn csv_bytes(
    draw: &(dyn Fn(&mut crate::rng::Rng) -> Result<MultilevelSample> + Sync),
    draws: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let xs = pool.install(|| sample_batch(draws, seed, draw))?;
    let mut buf = Vec::new();
    write_csv(&xs, &mut buf)?;
    Ok(buf)
}

/// Same seed gives byte-identical CSV, with one and with four workers.
pub fn check_csv_determinism(draws: usize, seed: u64) -> Result<TestReport> {
    let mut mismatches = 0usize;
    let mut parts = Vec::new();
    for (label, draw) in invariant_models() {
        let s = derive_seed(seed, &label);
        let one = csv_bytes(draw.as_ref(), draws, s, 1)?;
        let again = csv_bytes(draw.as_ref(), draws, s, 1)?;
        let four = csv_bytes(draw.as_ref(), draws, s, 4)?;
        let here = usize::from(one != again) + usize::from(one != four);
        mismatches += here;
        parts.push(format!("{label}: {} bytes, {here} mismatches", one.len()));
    }
    Ok(TestReport::tolerance_test(
        "invariant/csv-determinism",
        "mismatches",
        mismatches as f64,
        0.0,
        draws,
    )
    .with_detail(parts.join("; ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_have_unique_sorted_ids() {
        for suite in Suite::ALL {
            let ids: Vec<String> = suite.tests().into_iter().map(|t| t.id).collect();
            let mut sorted = ids.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(ids, sorted, "{suite}");
            assert_eq!(suite.as_str().parse::<Suite>().unwrap(), suite);
        }
    }

    #[test]
    fn criteria_are_numbered_in_order() {
        let c = acceptance_criteria();
        assert_eq!(c.len(), 12);
        for (i, k) in c.iter().enumerate() {
            assert_eq!(k.number, i + 1);
            assert!(!k.tests.is_empty());
        }
        assert_eq!(c[10].tests.len(), 16);
    }

    #[test]
    fn reports_merge_in_id_order() {
        let tests = vec![
            SuiteTest::new("b", |seed| {
                Ok(TestReport::tolerance_test(
                    "x",
                    "s",
                    (seed % 7) as f64,
                    10.0,
                    1,
                ))
            }),
            SuiteTest::new("a", |_| Err(Error::NaN)),
        ];
        let r = run_tests(&tests, 3);
        assert_eq!(r[0].test_id, "a");
        assert!(!r[0].passed);
        assert!(r[0].detail.starts_with("error"));
        assert!(r[1].passed);
        assert_eq!(r[1].seed, Some(derive_seed(3, "b")));
        let again = run_tests(&tests, 3);
        assert_eq!(r[1].statistic, again[1].statistic);
        let mut buf = Vec::new();
        write_report_rows(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
        assert!(summary_table(&r).ends_with("2 tests, 1 failed\n"));
    }

    #[test]
    fn small_invariant_checks_pass() {
        assert!(check_interlacing(200, 1).unwrap().passed);
        assert!(check_csv_determinism(50, 2).unwrap().passed);
    }
}
