//! Algebraic combinations of witness sequences: rationally independent
//! exponents, polynomial combinations, exponential multipliers and
//! truncations.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::distance_to_complement;
use crate::sequence::Sequence;
use crate::witness::{WitnessKind, WitnessSequence};

/// `sqrt(prime) / 2^shift`, a member of (0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub prime: u64,
    pub shift: u32,
    pub value: f64,
    pub tag: String,
}

impl Generator {
    pub fn new(prime: u64) -> Generator {
        // smallest k with 4^k >= p, i.e. 2^k >= sqrt(p)
        let mut shift = 0u32;
        while 4u128.pow(shift) < prime as u128 {
            shift += 1;
        }
        let value = (prime as f64).sqrt() / (1u64 << shift) as f64;
        let tag = if shift == 0 { format!("sqrt({prime})") } else { format!("sqrt({prime})/{}", 1u64 << shift) };
        Generator { prime, shift, value, tag }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSet {
    pub generators: Vec<Generator>,
}

impl GeneratorSet {
    pub fn values(&self) -> Vec<f64> {
        self.generators.iter().map(|g| g.value).collect()
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut k = 2u64;
    while out.len() < n {
        if out.iter().take_while(|p| *p * *p <= k).all(|p| k % p != 0) {
            out.push(k);
        }
        k += 1;
    }
    out
}

/// Scaled square roots of the first `n` primes; linearly independent over
/// the rationals.
pub fn q_independent_generators(n: usize) -> Result<GeneratorSet> {
    if !(1..=64).contains(&n) {
        return Err(Error::Config(format!("generator count must be in 1..=64, got {n}")));
    }
    Ok(GeneratorSet { generators: first_primes(n).into_iter().map(Generator::new).collect() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub lambda: Complex64,
    pub alpha: Vec<u32>,
}

/// Polynomial without constant term in `n_vars` variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct MultivariatePolynomial {
    pub n_vars: usize,
    pub terms: Vec<Term>,
}

impl TryFrom<Vec<Term>> for MultivariatePolynomial {
    type Error = Error;

    fn try_from(terms: Vec<Term>) -> Result<Self> {
        MultivariatePolynomial::new(terms)
    }
}

impl From<MultivariatePolynomial> for Vec<Term> {
    fn from(p: MultivariatePolynomial) -> Vec<Term> {
        p.terms
    }
}

impl MultivariatePolynomial {
    pub fn new(terms: Vec<Term>) -> Result<MultivariatePolynomial> {
        let n_vars = terms.first().map(|t| t.alpha.len()).ok_or_else(|| Error::Config("empty polynomial".into()))?;
        for (i, t) in terms.iter().enumerate() {
            if t.alpha.len() != n_vars {
                return Err(Error::Config("exponent vectors differ in length".into()));
            }
            if t.alpha.iter().all(|a| *a == 0) {
                return Err(Error::Config("constant terms are not allowed".into()));
            }
            if t.lambda.norm() == 0.0 || !t.lambda.re.is_finite() || !t.lambda.im.is_finite() {
                return Err(Error::Config("coefficients must be finite and nonzero".into()));
            }
            if terms[..i].iter().any(|u| u.alpha == t.alpha) {
                return Err(Error::Rejected(format!("duplicate exponent vector {:?}", t.alpha)));
            }
        }
        Ok(MultivariatePolynomial { n_vars, terms })
    }

    pub fn from_json_str(s: &str) -> Result<MultivariatePolynomial> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("polynomial: {e}")))
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.lambda * t.alpha.iter().zip(x).map(|(a, v)| v.powu(*a)).product::<Complex64>())
            .sum()
    }

    pub fn scaled(&self, s: Complex64) -> MultivariatePolynomial {
        let terms = self.terms.iter().map(|t| Term { lambda: t.lambda * s, alpha: t.alpha.clone() }).collect();
        MultivariatePolynomial { n_vars: self.n_vars, terms }
    }
}

/// Exponents `c_j = <alpha_j, h>`, each kept exactly as an integer vector over
/// `sqrt(p_i)` with the common denominator `2^denominator_shift`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentProfile {
    pub values: Vec<f64>,
    pub exact: Vec<Vec<u128>>,
    pub denominator_shift: u32,
    pub primes: Vec<u64>,
    pub distinct: bool,
    pub dominant: usize,
    pub dominant_value: f64,
    pub tags: Vec<String>,
}

fn exact_tag(coeffs: &[u128], primes: &[u64], shift: u32) -> String {
    let parts: Vec<String> = coeffs
        .iter()
        .zip(primes)
        .filter(|(c, _)| **c > 0)
        .map(|(c, p)| if *c == 1 { format!("sqrt({p})") } else { format!("{c}*sqrt({p})") })
        .collect();
    let body = if parts.len() > 1 { format!("({})", parts.join(" + ")) } else { parts.join("") };
    if shift == 0 {
        body
    } else {
        format!("{body}/{}", 1u128 << shift)
    }
}

pub fn exponent_profile(p: &MultivariatePolynomial, h: &GeneratorSet) -> Result<ExponentProfile> {
    if p.n_vars != h.len() {
        return Err(Error::Config(format!("polynomial has {} variables, generator set {}", p.n_vars, h.len())));
    }
    let shift = h.generators.iter().map(|g| g.shift).max().unwrap_or(0);
    let exact: Vec<Vec<u128>> = p
        .terms
        .iter()
        .map(|t| {
            t.alpha
                .iter()
                .zip(&h.generators)
                .map(|(a, g)| (*a as u128) << (shift - g.shift))
                .collect()
        })
        .collect();
    let hv = h.values();
    let values: Vec<f64> =
        p.terms.iter().map(|t| t.alpha.iter().zip(&hv).map(|(a, v)| *a as f64 * v).sum()).collect();
    // square roots of distinct primes are independent over Q, so equal
    // exponents means equal coefficient vectors
    let distinct = (0..exact.len()).all(|i| (0..i).all(|j| exact[i] != exact[j]));
    let dominant = (0..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let primes: Vec<u64> = h.generators.iter().map(|g| g.prime).collect();
    let tags = exact.iter().map(|c| exact_tag(c, &primes, shift)).collect();
    Ok(ExponentProfile {
        dominant_value: values[dominant],
        values,
        exact,
        denominator_shift: shift,
        primes,
        distinct,
        dominant,
        tags,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeProbe {
    pub n: usize,
    pub z: Complex64,
    pub eps: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ProbeSearch {
    pub probes: Vec<EscapeProbe>,
    pub diagnostic: Option<String>,
}

/// Indices `n <= n_max` with a designated escape point where `|f_n| > eps0`.
pub fn escape_probes(f: &dyn Sequence, eps0: f64, n_max: usize) -> Result<ProbeSearch> {
    let mut probes = Vec::new();
    for n in 1..=n_max {
        let pts = f.escape_probes(n);
        if pts.is_empty() {
            continue;
        }
        let vals = f.eval_many(n, &pts)?;
        if let Some((z, _)) = pts.iter().zip(&vals).find(|(_, v)| v.norm() > eps0) {
            probes.push(EscapeProbe { n, z: *z, eps: eps0 });
        }
    }
    let diagnostic = probes.is_empty().then(|| format!("no escape probe above {eps0} for n <= {n_max}"));
    Ok(ProbeSearch { probes, diagnostic })
}

/// Which of the two rotation schemes a rotated span member uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationCase {
    /// Probes leave every bounded set; multiplier `e^{c a_k z}`.
    Unbounded,
    /// Probes accumulate at a boundary point `z0`; multiplier `e^{c a_k / (z - z0)}`.
    Boundary { z0: Complex64 },
}

/// Entire multiplier: a polynomial or a finite exponential sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entire {
    Polynomial(Vec<Complex64>),
    ExpSum { lambdas: Vec<Complex64>, cs: Vec<f64> },
}

impl Entire {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Entire::Polynomial(c) => c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a),
            Entire::ExpSum { lambdas, cs } => lambdas.iter().zip(cs).map(|(l, c)| l * (z * c).exp()).sum(),
        }
    }

    /// `z^k`.
    pub fn monomial(k: usize) -> Entire {
        let mut c = vec![Complex64::new(0.0, 0.0); k + 1];
        c[k] = Complex64::new(1.0, 0.0);
        Entire::Polynomial(c)
    }
}

#[derive(Clone)]
pub enum SequenceExpression {
    Leaf(Arc<dyn Sequence>),
    Combine(MultivariatePolynomial, Vec<SequenceExpression>),
    SpanMember { lambdas: Vec<Complex64>, cs: Vec<f64>, f: Box<SequenceExpression> },
    RotatedSpanMember {
        lambdas: Vec<Complex64>,
        cs: Vec<f64>,
        f: Box<SequenceExpression>,
        probes: Vec<EscapeProbe>,
        case: RotationCase,
    },
    /// `phi * f_n` with the factorization kept for the weighted norms.
    Product(Entire, Box<SequenceExpression>),
    Truncate(Box<SequenceExpression>, usize),
    Scale(Complex64, Box<SequenceExpression>),
    Sum(Vec<SequenceExpression>),
}

impl SequenceExpression {
    pub fn leaf<S: Sequence + 'static>(s: Arc<S>) -> SequenceExpression {
        SequenceExpression::Leaf(s)
    }

    pub fn scale(self, lambda: Complex64) -> SequenceExpression {
        SequenceExpression::Scale(lambda, Box::new(self))
    }

    pub fn product(self, phi: Entire) -> SequenceExpression {
        SequenceExpression::Product(phi, Box::new(self))
    }

    fn children(&self) -> Vec<&SequenceExpression> {
        use SequenceExpression::*;
        match self {
            Leaf(_) => vec![],
            Combine(_, v) | Sum(v) => v.iter().collect(),
            SpanMember { f, .. } | RotatedSpanMember { f, .. } | Product(_, f) | Truncate(f, _) | Scale(_, f) => {
                vec![f.as_ref()]
            }
        }
    }

    fn collect<F: Fn(&dyn Sequence) -> Vec<Complex64>>(&self, f: &F) -> Vec<Complex64> {
        match self {
            SequenceExpression::Leaf(s) => f(s.as_ref()),
            _ => {
                let mut out: Vec<Complex64> = Vec::new();
                for c in self.children() {
                    for z in c.collect(f) {
                        if !out.contains(&z) {
                            out.push(z);
                        }
                    }
                }
                out
            }
        }
    }
}

fn rotated_multiplier(c: f64, n: usize, z: Complex64, probes: &[EscapeProbe], case: &RotationCase) -> Complex64 {
    let probe = probes.iter().find(|p| p.n == n);
    match case {
        RotationCase::Unbounded => {
            let a = probe.map_or(Complex64::new(1.0, 0.0), |p| p.z.conj() / p.z.norm());
            (c * a * z).exp()
        }
        RotationCase::Boundary { z0 } => {
            let a = probe.map_or(Complex64::new(1.0, 0.0), |p| (p.z - z0) / (p.z - z0).norm());
            (c * a / (z - z0)).exp()
        }
    }
}

impl Sequence for SequenceExpression {
    fn label(&self) -> String {
        use SequenceExpression::*;
        match self {
            Leaf(s) => s.label(),
            Combine(p, v) => {
                format!("P[{} terms]({})", p.terms.len(), v.iter().map(|e| e.label()).collect::<Vec<_>>().join(", "))
            }
            SpanMember { cs, f, .. } => format!("span(c={cs:?}) * {}", f.label()),
            RotatedSpanMember { cs, f, .. } => format!("rotated-span(c={cs:?}) * {}", f.label()),
            Product(_, f) => format!("phi * {}", f.label()),
            Truncate(f, n0) => format!("truncate({}, {n0})", f.label()),
            Scale(l, f) => format!("({l}) * {}", f.label()),
            Sum(v) => v.iter().map(|e| e.label()).collect::<Vec<_>>().join(" + "),
        }
    }

    fn eval_many(&self, n: usize, zs: &[Complex64]) -> Result<Vec<Complex64>> {
        use SequenceExpression::*;
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Leaf(s) => s.eval_many(n, zs),
            Combine(p, v) => {
                let cols: Vec<Vec<Complex64>> = v.iter().map(|e| e.eval_many(n, zs)).collect::<Result<_>>()?;
                let mut x = vec![zero; cols.len()];
                Ok((0..zs.len())
                    .map(|k| {
                        for (i, c) in cols.iter().enumerate() {
                            x[i] = c[k];
                        }
                        p.eval(&x)
                    })
                    .collect())
            }
            SpanMember { lambdas, cs, f } => {
                let fv = f.eval_many(n, zs)?;
                Ok(zs
                    .iter()
                    .zip(fv)
                    .map(|(z, v)| v * lambdas.iter().zip(cs).map(|(l, c)| l * (z * c).exp()).sum::<Complex64>())
                    .collect())
            }
            RotatedSpanMember { lambdas, cs, f, probes, case } => {
                let fv = f.eval_many(n, zs)?;
                Ok(zs
                    .iter()
                    .zip(fv)
                    .map(|(z, v)| {
                        v * lambdas
                            .iter()
                            .zip(cs)
                            .map(|(l, c)| l * rotated_multiplier(*c, n, *z, probes, case))
                            .sum::<Complex64>()
                    })
                    .collect())
            }
            Product(phi, f) => Ok(zs.iter().zip(f.eval_many(n, zs)?).map(|(z, v)| phi.eval(*z) * v).collect()),
            Truncate(f, n0) => {
                if n >= *n0 {
                    Ok(vec![zero; zs.len()])
                } else {
                    f.eval_many(n, zs)
                }
            }
            Scale(l, f) => Ok(f.eval_many(n, zs)?.into_iter().map(|v| l * v).collect()),
            Sum(v) => {
                let mut acc = vec![zero; zs.len()];
                for e in v {
                    for (a, x) in acc.iter_mut().zip(e.eval_many(n, zs)?) {
                        *a += x;
                    }
                }
                Ok(acc)
            }
        }
    }

    fn pointwise_points(&self) -> Vec<Complex64> {
        self.collect(&|s: &dyn Sequence| s.pointwise_points())
    }

    fn compact_probes(&self, n: usize) -> Vec<Complex64> {
        if let SequenceExpression::Truncate(_, n0) = self {
            if n >= *n0 {
                return vec![];
            }
        }
        self.collect(&|s: &dyn Sequence| s.compact_probes(n))
    }

    fn escape_probes(&self, n: usize) -> Vec<Complex64> {
        if let SequenceExpression::Truncate(_, n0) = self {
            if n >= *n0 {
                return vec![];
            }
        }
        self.collect(&|s: &dyn Sequence| s.escape_probes(n))
    }
}

/// `P(f_1, ..., f_N)` evaluated termwise.
pub fn combine(p: &MultivariatePolynomial, seqs: Vec<SequenceExpression>) -> Result<SequenceExpression> {
    if seqs.len() != p.n_vars {
        return Err(Error::Config(format!("polynomial takes {} sequences, got {}", p.n_vars, seqs.len())));
    }
    Ok(SequenceExpression::Combine(p.clone(), seqs))
}

fn check_multipliers(lambdas: &[Complex64], cs: &[f64]) -> Result<()> {
    if lambdas.len() != cs.len() || cs.is_empty() {
        return Err(Error::Config("need one coefficient per exponent".into()));
    }
    if lambdas.iter().any(|l| l.norm() == 0.0) {
        return Err(Error::Config("coefficients must be nonzero".into()));
    }
    if cs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Error::Config("exponents must be finite and nonnegative".into()));
    }
    for w in cs.windows(2) {
        if w[0] == w[1] {
            return Err(Error::Rejected(format!("duplicate exponent {}", w[0])));
        }
        if w[0] > w[1] {
            return Err(Error::Config("exponents must be sorted increasingly".into()));
        }
    }
    Ok(())
}

/// `(sum_j lambda_j e^{c_j z}) f_n(z)`.
pub fn span_member(lambdas: &[Complex64], cs: &[f64], f: Arc<WitnessSequence>) -> Result<SequenceExpression> {
    check_multipliers(lambdas, cs)?;
    if f.kind() != WitnessKind::SpNotSuc {
        return Err(Error::Rejected("span members are built over pointwise-not-compact witnesses".into()));
    }
    Ok(SequenceExpression::SpanMember {
        lambdas: lambdas.to_vec(),
        cs: cs.to_vec(),
        f: Box::new(SequenceExpression::Leaf(f)),
    })
}

/// Picks the rotation scheme from the probe trajectory: probes approaching
/// the boundary give the boundary case, probes running off give the
/// unbounded case.
pub fn rotation_case(f: &WitnessSequence, probes: &[EscapeProbe]) -> Result<RotationCase> {
    let (first, last) = match (probes.first(), probes.last()) {
        (Some(a), Some(b)) => (a.z, b.z),
        _ => return Err(Error::Config("no escape probes".into())),
    };
    let d = |z: Complex64| distance_to_complement(f.domain(), z);
    if d(last).is_finite() && probes.len() >= 2 && d(last) < 0.5 * d(first) {
        let prev = probes[probes.len() - 2].z;
        let dir = if (last - prev).norm() > 0.0 { (last - prev) / (last - prev).norm() } else { Complex64::new(1.0, 0.0) };
        return Ok(RotationCase::Boundary { z0: last + dir * d(last) });
    }
    if last.norm() > first.norm() {
        return Ok(RotationCase::Unbounded);
    }
    Err(Error::Diagnostic("probes neither approach the boundary nor run off".into()))
}

pub fn rotated_span_member(
    lambdas: &[Complex64],
    cs: &[f64],
    f: Arc<WitnessSequence>,
    probes: &[EscapeProbe],
) -> Result<SequenceExpression> {
    check_multipliers(lambdas, cs)?;
    if f.kind().claimed() != (true, true, false) {
        return Err(Error::Rejected("rotated span members need a compact-but-not-uniform base".into()));
    }
    let case = rotation_case(&f, probes)?;
    Ok(SequenceExpression::RotatedSpanMember {
        lambdas: lambdas.to_vec(),
        cs: cs.to_vec(),
        f: Box::new(SequenceExpression::Leaf(f)),
        probes: probes.to_vec(),
        case,
    })
}

/// Zero from index `n0` on.
pub fn truncate(f: SequenceExpression, n0: usize) -> Result<SequenceExpression> {
    if n0 < 1 {
        return Err(Error::Config("truncation index starts at 1".into()));
    }
    Ok(SequenceExpression::Truncate(Box::new(f), n0))
}
