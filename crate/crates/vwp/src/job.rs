//! Job documents: a JSON config merged with command-line flags, resolved
//! into a core job plus options.

use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use vwp_core::exact::{parse_real, CRat};
use vwp_core::identities::{Job, VerifyOptions};
use vwp_core::params::{GustafsonParams, IdentityKind, Nome, ParameterSet, RationalPoint, IDENTITY_PERM};
use vwp_core::terms::AomotoReading;

/// A number written either as a JSON number or as a string (`"7/20"`,
/// `"0.35"`, `"0.1+0.2i"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Text(String),
    Float(f64),
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Text(s) => f.write_str(s),
            Num::Float(x) => write!(f, "{x}"),
        }
    }
}

impl From<&str> for Num {
    fn from(s: &str) -> Self {
        Num::Text(s.to_string())
    }
}

/// A list given as an array or as one comma-separated string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumList {
    Joined(String),
    Items(Vec<Num>),
}

impl NumList {
    pub fn items(&self) -> Vec<String> {
        match self {
            NumList::Joined(s) => s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect(),
            NumList::Items(v) => v.iter().map(|x| x.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub identity: Option<String>,
    pub n: Option<usize>,
    pub q: Option<Num>,
    pub g: Option<Num>,
    pub g1: Option<Num>,
    pub g2: Option<Num>,
    pub g3: Option<Num>,
    pub g4: Option<Num>,
    /// 1-based coupling indices playing the roles `a, b, c, d`.
    pub perm: Option<NumList>,
    pub z: Option<NumList>,
    /// All `2n+2` couplings of the Gustafson sum.
    pub couplings: Option<NumList>,
    #[serde(rename = "N")]
    pub big_n: Option<u32>,
    pub mode: Option<String>,
    pub precision_bits: Option<usize>,
    pub tol: Option<f64>,
    pub max_radius: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub reading: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl JobSpec {
    pub fn from_file(path: &Path) -> Result<JobSpec> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `top` win.
    pub fn overlay(mut self, top: JobSpec) -> JobSpec {
        overlay!(
            self, top, identity, n, q, g, g1, g2, g3, g4, perm, z, couplings, big_n, mode, precision_bits, tol,
            max_radius, seed, out, reading
        );
        self
    }

    pub fn kind(&self) -> Result<IdentityKind> {
        let name = self.identity.as_deref().ok_or_else(|| anyhow!("missing --identity"))?;
        IdentityKind::parse(name).ok_or_else(|| anyhow!("unknown identity {name:?}"))
    }

    pub fn is_rational(&self) -> Result<bool> {
        match self.mode.as_deref().unwrap_or("float") {
            "float" => Ok(false),
            "rational" => Ok(true),
            m => bail!("unknown mode {m:?}"),
        }
    }

    pub fn options(&self) -> Result<VerifyOptions> {
        let mut o = VerifyOptions::default();
        if let Some(b) = self.precision_bits {
            o.precision_bits = b;
        }
        o.tol = self.tol;
        if let Some(r) = self.max_radius {
            o.max_radius = r;
        }
        o.reading = match self.reading.as_deref().unwrap_or("symmetric") {
            "symmetric" => AomotoReading::Symmetric,
            "literal" => AomotoReading::Literal,
            r => bail!("unknown reading {r:?}"),
        };
        Ok(o)
    }

    fn n(&self) -> Result<usize> {
        match self.n {
            Some(0) => bail!("n must be positive"),
            Some(n) => Ok(n),
            None => bail!("missing --n"),
        }
    }

    fn nome(&self) -> Result<Nome> {
        let q = self.q.as_ref().ok_or_else(|| anyhow!("missing --q"))?;
        Ok(Nome::parse(&q.to_string())?)
    }

    fn num(&self, name: &str, v: &Option<Num>) -> Result<CRat> {
        let v = v.as_ref().ok_or_else(|| anyhow!("missing --{name}"))?;
        Ok(CRat::parse(&v.to_string())?)
    }

    fn perm(&self) -> Result<[usize; 4]> {
        let Some(p) = &self.perm else { return Ok(IDENTITY_PERM) };
        let items = p.items();
        if items.len() != 4 {
            bail!("--perm needs four indices");
        }
        let mut out = [0usize; 4];
        for (slot, s) in out.iter_mut().zip(&items) {
            let i: usize = s.parse().with_context(|| format!("bad perm entry {s:?}"))?;
            if !(1..=4).contains(&i) {
                bail!("perm entries are 1..4");
            }
            *slot = i - 1;
        }
        let mut seen = [false; 4];
        out.iter().for_each(|&i| seen[i] = true);
        if !seen.iter().all(|&s| s) {
            bail!("--perm must be a permutation of 1,2,3,4");
        }
        Ok(out)
    }

    fn z(&self) -> Result<Option<Vec<CRat>>> {
        match &self.z {
            None => Ok(None),
            Some(l) => Ok(Some(l.items().iter().map(|s| CRat::parse(s)).collect::<Result<_, _>>()?)),
        }
    }

    fn couplings4(&self) -> Result<[CRat; 4]> {
        Ok([
            self.num("g1", &self.g1)?,
            self.num("g2", &self.g2)?,
            self.num("g3", &self.g3)?,
            self.num("g4", &self.g4)?,
        ])
    }

    pub fn resolve(&self) -> Result<(Job, VerifyOptions)> {
        let kind = self.kind()?;
        let opts = self.options()?;
        let n = self.n()?;
        let q = self.nome()?;
        if self.is_rational()? {
            if kind != IdentityKind::Terminating {
                bail!("rational mode only supports the terminating identity");
            }
            let perm = self.perm()?;
            let big_n = self.big_n.ok_or_else(|| anyhow!("missing --N"))?;
            let real = |name: &str, v: &Option<Num>| -> Result<_> {
                let v = v.as_ref().ok_or_else(|| anyhow!("missing --{name}"))?;
                Ok(parse_real(&v.to_string())?)
            };
            let t = real("g", &self.g)?;
            let fields = [("g1", &self.g1), ("g2", &self.g2), ("g3", &self.g3), ("g4", &self.g4)];
            let mut x: [_; 4] = Default::default();
            for (i, (name, v)) in fields.iter().enumerate() {
                // the b generator is fixed by the constraint
                if i != perm[1] || v.is_some() {
                    x[i] = real(name, v)?;
                }
            }
            return Ok((Job::Rational(RationalPoint::new(n, q, t, x, perm, big_n)?), opts));
        }
        let z = self.z()?;
        if kind == IdentityKind::Gustafson {
            let cs = self.couplings.as_ref().ok_or_else(|| anyhow!("missing --couplings"))?;
            let cs = cs.items().iter().map(|s| CRat::parse(s)).collect::<Result<Vec<_>, _>>()?;
            return Ok((Job::Gustafson { params: GustafsonParams::new(n, q, cs)?, z }, opts));
        }
        let perm = self.perm()?;
        let g = if kind == IdentityKind::BaileyDougall && n == 1 && self.g.is_none() {
            CRat::zero()
        } else {
            self.num("g", &self.g)?
        };
        let params = ParameterSet::new(n, q, g, self.couplings4()?, perm)?;
        Ok((Job::Standard { kind, params, z, big_n: self.big_n }, opts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let file: JobSpec = serde_json::from_str(r#"{"identity":"macdonald","n":2,"q":0.5,"g":"7/20","tol":1e-10}"#).unwrap();
        let flags = JobSpec { n: Some(1), ..Default::default() };
        let s = file.overlay(flags);
        assert_eq!(s.n, Some(1));
        assert_eq!(s.tol, Some(1e-10));
        assert_eq!(s.g, Some(Num::from("7/20")));
    }

    #[test]
    fn lists_accept_both_shapes() {
        let a = NumList::Joined("0.37, 0.11".into());
        let b: NumList = serde_json::from_str(r#"[0.37, "0.11"]"#).unwrap();
        assert_eq!(a.items(), b.items());
    }

    #[test]
    fn rejects_bad_perm() {
        let s = JobSpec { perm: Some(NumList::Joined("1,1,2,3".into())), ..Default::default() };
        assert!(s.perm().is_err());
    }
}
