//! Text import and export of GKLS models.
//!
//! ```toml
//! dim = 2
//! hamiltonian = ["-0.5,0", "0,0", "0,0", "0.5,0"]   # row-major "re,im"
//! lamb_shift = ["0,0", "0,0", "0,0", "0,0"]         # optional
//! kossakowski = ["1,0"]                             # jumps x jumps, row-major
//!
//! [[jump]]
//! omega = -1.0
//! operator = ["0,0", "1,0", "0,0", "0,0"]
//! ```

use super::{GklsModel, JumpOperator};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::rates::KossakowskiBlock;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    dim: usize,
    hamiltonian: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lamb_shift: Option<Vec<String>>,
    kossakowski: Vec<String>,
    #[serde(default, rename = "jump")]
    jumps: Vec<JumpFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpFile {
    omega: f64,
    operator: Vec<String>,
}

fn parse_entry(text: &str, what: &str) -> Result<crate::linalg::C64> {
    let mut parts = text.split(',');
    let (Some(re), Some(im), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::Parse(format!("{what}: entry {text:?} is not of the form \"re,im\"")));
    };
    let re: f64 = re.trim().parse().map_err(|_| Error::Parse(format!("{what}: bad real part in {text:?}")))?;
    let im: f64 = im.trim().parse().map_err(|_| Error::Parse(format!("{what}: bad imaginary part in {text:?}")))?;
    Ok(c(re, im))
}

fn parse_matrix(entries: &[String], n: usize, what: &str) -> Result<CMatrix> {
    if entries.len() != n * n {
        return Err(Error::Parse(format!("{what}: expected {} entries, found {}", n * n, entries.len())));
    }
    let values = entries.iter().map(|e| parse_entry(e, what)).collect::<Result<Vec<_>>>()?;
    Ok(CMatrix::from_row_slice(n, n, &values))
}

fn format_matrix(m: &CMatrix) -> Vec<String> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(format!("{:?},{:?}", m[(i, j)].re, m[(i, j)].im));
        }
    }
    out
}

impl GklsModel {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))?;
        let d = file.dim;
        if d == 0 {
            return Err(Error::Parse("model file: dim must be positive".into()));
        }
        let h = parse_matrix(&file.hamiltonian, d, "hamiltonian")?;
        let mut jumps = Vec::with_capacity(file.jumps.len());
        for (i, j) in file.jumps.iter().enumerate() {
            jumps.push(JumpOperator::new(parse_matrix(&j.operator, d, &format!("jump {i}"))?, j.omega));
        }
        let rates = parse_matrix(&file.kossakowski, jumps.len(), "kossakowski")?;
        let labels = jumps.iter().enumerate().map(|(i, j)| (i, j.omega)).collect();
        let model = GklsModel::new(h, jumps, KossakowskiBlock::from_matrix(labels, rates)?)?;
        match file.lamb_shift {
            Some(entries) => model.with_lamb_shift(parse_matrix(&entries, d, "lamb_shift")?),
            None => Ok(model),
        }
    }

    pub fn from_toml_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Entries are written with round-trip precision.
    pub fn to_toml_string(&self) -> String {
        let lamb = self.lamb_shift();
        let file = ModelFile {
            dim: self.dim(),
            hamiltonian: format_matrix(self.system_hamiltonian()),
            lamb_shift: if lamb.iter().all(|z| *z == c(0.0, 0.0)) { None } else { Some(format_matrix(lamb)) },
            kossakowski: format_matrix(&self.kossakowski().matrix),
            jumps: self
                .jumps()
                .iter()
                .map(|j| JumpFile { omega: j.omega, operator: format_matrix(&j.operator) })
                .collect(),
        };
        toml::to_string(&file).expect("model file is always serialisable")
    }
}
