//! JSON file formats: bases (sparse or dense amplitudes) and matrices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isometry::{Field, Isometry, Source};
use crate::model::{BipartiteState, EntangledBasis, Family, Provenance, ZERO_TOL};
use crate::multipartite::MultipartiteBasis;
use crate::numerics::{CMatrix, C64, ZERO};

pub const FORMAT_VERSION: &str = "1";
pub const TOOL_VERSION: &str = concat!("ebk ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Bipartite,
    Multipartite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitude {
    /// One computational-basis index per party.
    pub indices: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<Amplitude>>,
    /// Full amplitude vector as `[re, im]` pairs, party 1 most significant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisFile {
    pub format_version: String,
    pub kind: BasisKind,
    pub dims: Vec<usize>,
    pub k: usize,
    pub family: String,
    pub states: Vec<StateEntry>,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

fn stamp(provenance: &Provenance) -> BTreeMap<String, String> {
    let mut p = provenance.0.clone();
    p.insert("tool".into(), TOOL_VERSION.into());
    p
}

impl BasisFile {
    pub fn from_bipartite(basis: &EntangledBasis) -> Self {
        let states = basis
            .states
            .iter()
            .enumerate()
            .map(|(index, s)| StateEntry {
                index,
                amplitudes: Some(
                    s.amplitudes()
                        .iter()
                        .map(|&(r, c, z)| Amplitude { indices: vec![r, c], re: z.re, im: z.im })
                        .collect(),
                ),
                dense: None,
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION.into(),
            kind: BasisKind::Bipartite,
            dims: basis.dims.to_vec(),
            k: basis.k,
            family: basis.family.as_str().into(),
            states,
            provenance: stamp(&basis.provenance),
        }
    }

    pub fn from_multipartite(basis: &MultipartiteBasis) -> Self {
        let states = basis
            .tensors()
            .iter()
            .enumerate()
            .map(|(index, t)| StateEntry {
                index,
                amplitudes: Some(
                    t.iter()
                        .enumerate()
                        .filter(|(_, z)| **z != ZERO)
                        .map(|(flat, z)| Amplitude { indices: unflatten(flat, &basis.dims), re: z.re, im: z.im })
                        .collect(),
                ),
                dense: None,
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION.into(),
            kind: if basis.dims.len() == 2 { BasisKind::Bipartite } else { BasisKind::Multipartite },
            dims: basis.dims.clone(),
            k: basis.k,
            family: basis.family.as_str().into(),
            states,
            provenance: stamp(&basis.provenance),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("basis files always serialize");
        s.push('\n');
        s
    }

    /// Parses and checks structure: version, kind, dims, index ranges,
    /// duplicates and finiteness. Normalization is not checked here.
    pub fn parse(text: &str) -> Result<Self> {
        let file: BasisFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.check_structure()?;
        Ok(file)
    }

    fn check_structure(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "format_version `{}` is not supported (expected \"{FORMAT_VERSION}\")",
                self.format_version
            )));
        }
        if self.dims.len() < 2 || self.dims.contains(&0) {
            return Err(Error::Format(format!("dims {:?} must list at least two positive dimensions", self.dims)));
        }
        let expected_kind = if self.dims.len() == 2 { BasisKind::Bipartite } else { BasisKind::Multipartite };
        if self.kind != expected_kind {
            return Err(Error::Format(format!("kind {:?} does not match {} parties", self.kind, self.dims.len())));
        }
        Family::parse(&self.family).map_err(|_| Error::Format(format!("unknown family `{}`", self.family)))?;
        if self.k == 0 {
            return Err(Error::Format("k must be at least 1".into()));
        }
        let total: usize = self.dims.iter().product();
        let mut seen = BTreeMap::new();
        for (pos, st) in self.states.iter().enumerate() {
            if seen.insert(st.index, pos).is_some() {
                return Err(Error::Format(format!("state index {} appears twice", st.index)));
            }
            match (&st.amplitudes, &st.dense) {
                (Some(amps), None) => {
                    let mut cells = std::collections::BTreeSet::new();
                    for a in amps {
                        if a.indices.len() != self.dims.len() || a.indices.iter().zip(&self.dims).any(|(&i, &d)| i >= d) {
                            return Err(Error::Format(format!(
                                "state {}: indices {:?} outside dims {:?}",
                                st.index, a.indices, self.dims
                            )));
                        }
                        if !a.re.is_finite() || !a.im.is_finite() {
                            return Err(Error::Format(format!("state {}: non-finite amplitude", st.index)));
                        }
                        if !cells.insert(a.indices.clone()) {
                            return Err(Error::Format(format!("state {}: indices {:?} repeated", st.index, a.indices)));
                        }
                    }
                }
                (None, Some(dense)) => {
                    if dense.len() != total {
                        return Err(Error::Format(format!(
                            "state {}: dense vector has {} entries, dims need {total}",
                            st.index,
                            dense.len()
                        )));
                    }
                    if dense.iter().flatten().any(|x| !x.is_finite()) {
                        return Err(Error::Format(format!("state {}: non-finite amplitude", st.index)));
                    }
                }
                _ => {
                    return Err(Error::Format(format!(
                        "state {} needs exactly one of `amplitudes` or `dense`",
                        st.index
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Family {
        Family::parse(&self.family).expect("checked on parse")
    }

    /// Dense state vectors ordered by `index`.
    pub fn dense_states(&self) -> Vec<Vec<C64>> {
        let total: usize = self.dims.iter().product();
        let mut entries: Vec<&StateEntry> = self.states.iter().collect();
        entries.sort_by_key(|s| s.index);
        entries
            .into_iter()
            .map(|st| match (&st.amplitudes, &st.dense) {
                (Some(amps), _) => {
                    let mut v = vec![ZERO; total];
                    for a in amps {
                        v[flatten(&a.indices, &self.dims)] = C64::new(a.re, a.im);
                    }
                    v
                }
                (None, Some(dense)) => dense.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
                (None, None) => unreachable!("checked on parse"),
            })
            .collect()
    }

    /// Strict conversion for bipartite files: every state normalized within
    /// `1e-10`.
    pub fn to_bipartite(&self) -> Result<EntangledBasis> {
        if self.dims.len() != 2 {
            return Err(Error::Format("not a bipartite file".into()));
        }
        let (d, dp) = (self.dims[0], self.dims[1]);
        let states = self
            .dense_states()
            .into_iter()
            .map(|v| {
                let cells = v.into_iter().enumerate().map(|(i, z)| (i / dp, i % dp, z)).collect();
                BipartiteState::with_norm_tol(d, dp, cells, ZERO_TOL)
            })
            .collect::<Result<Vec<_>>>()?;
        let provenance = Provenance(self.provenance.clone());
        EntangledBasis::new([d, dp], self.k, states, self.family(), provenance)
    }
}

fn flatten(indices: &[usize], dims: &[usize]) -> usize {
    indices.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = flat % d;
        flat /= d;
    }
    out
}

/// Row-major complex matrix, entries as `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn parse(text: &str) -> Result<Self> {
        let m: MatrixFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if m.entries.len() != m.rows * m.cols {
            return Err(Error::Format(format!(
                "{} entries for a {}x{} matrix",
                m.entries.len(),
                m.rows,
                m.cols
            )));
        }
        Ok(m)
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        Self { rows: m.rows(), cols: m.cols(), entries: m.data().iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        CMatrix::new(self.rows, self.cols, self.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect())
    }

    pub fn to_isometry(&self, field: Field) -> Result<Isometry> {
        Isometry::new(self.to_matrix()?, Source::File, field)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("matrix files always serialize");
        s.push('\n');
        s
    }
}
