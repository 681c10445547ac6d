//! Binary-free JSON serialization for Hamiltonians, eigensystems, and
//! states, intended for cross-run reuse.
//!
//! All real numbers are encoded as decimal strings with 17 significant
//! digits, which round-trips every finite `f64` exactly.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::hamiltonians::{Bath, BathSpec, Eigensystem, SystemHamiltonian};
use crate::linalg::CMat;
use crate::states::DensityMatrix;
use crate::{Error, Result};

/// 17-significant-digit decimal encoding.
pub fn encode_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn decode_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::InvalidParameter(format!("bad decimal number {s:?}: {e}")))
}

fn encode_vec(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::String(encode_f64(x))).collect())
}

fn decode_vec(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::InvalidParameter(format!("{what} must be an array")))?
        .iter()
        .map(|x| {
            x.as_str()
                .ok_or_else(|| Error::InvalidParameter(format!("{what} entries must be strings")))
                .and_then(decode_f64)
        })
        .collect()
}

fn encode_matrix(m: &CMat) -> Value {
    let re: Vec<Value> = (0..m.nrows())
        .map(|i| encode_vec(&(0..m.ncols()).map(|j| m[[i, j]].re).collect::<Vec<_>>()))
        .collect();
    let im: Vec<Value> = (0..m.nrows())
        .map(|i| encode_vec(&(0..m.ncols()).map(|j| m[[i, j]].im).collect::<Vec<_>>()))
        .collect();
    json!({ "re": re, "im": im })
}

fn decode_matrix(v: &Value, what: &str) -> Result<CMat> {
    let re = v
        .get("re")
        .ok_or_else(|| Error::InvalidParameter(format!("{what} missing re")))?;
    let im = v
        .get("im")
        .ok_or_else(|| Error::InvalidParameter(format!("{what} missing im")))?;
    let re_rows: Vec<Vec<f64>> = re
        .as_array()
        .ok_or_else(|| Error::InvalidParameter(format!("{what} re must be an array")))?
        .iter()
        .map(|row| decode_vec(row, what))
        .collect::<Result<_>>()?;
    let im_rows: Vec<Vec<f64>> = im
        .as_array()
        .ok_or_else(|| Error::InvalidParameter(format!("{what} im must be an array")))?
        .iter()
        .map(|row| decode_vec(row, what))
        .collect::<Result<_>>()?;
    let rows = re_rows.len();
    if rows == 0 || im_rows.len() != rows {
        return Err(Error::InvalidParameter(format!("{what} shape mismatch")));
    }
    let cols = re_rows[0].len();
    let mut m: CMat = ndarray::Array2::zeros((rows, cols));
    for i in 0..rows {
        if re_rows[i].len() != cols || im_rows[i].len() != cols {
            return Err(Error::InvalidParameter(format!("{what} ragged rows")));
        }
        for j in 0..cols {
            m[[i, j]] = Complex64::new(re_rows[i][j], im_rows[i][j]);
        }
    }
    Ok(m)
}

pub fn system_to_json(hs: &SystemHamiltonian) -> Value {
    json!({
        "schema": "thermalab/system-hamiltonian/v1",
        "n_qubits": hs.n_qubits(),
        "energies": encode_vec(hs.energies()),
        "basis": hs.basis().map(encode_matrix),
    })
}

pub fn system_from_json(v: &Value) -> Result<SystemHamiltonian> {
    let n = v
        .get("n_qubits")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::InvalidParameter("system missing n_qubits".into()))?;
    let energies = decode_vec(
        v.get("energies")
            .ok_or_else(|| Error::InvalidParameter("system missing energies".into()))?,
        "energies",
    )?;
    let hs = SystemHamiltonian::new(n as usize, energies)?;
    match v.get("basis") {
        None | Some(Value::Null) => Ok(hs),
        Some(b) => hs.with_basis(decode_matrix(b, "basis")?),
    }
}

pub fn bath_to_json(bath: &Bath) -> Value {
    json!({
        "schema": "thermalab/bath/v1",
        "m": bath.spec.m,
        "eta": encode_f64(bath.spec.eta),
        "disorder_rel": encode_f64(bath.spec.disorder_rel),
        "seed": bath.spec.seed,
        "site_fields": encode_vec(&bath.site_fields),
        "energies": encode_vec(&bath.energies),
        "configuration_energies": encode_vec(&bath.configuration_energies),
    })
}

pub fn bath_from_json(v: &Value) -> Result<Bath> {
    let spec = BathSpec {
        m: v
            .get("m")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::InvalidParameter("bath missing m".into()))? as usize,
        eta: decode_f64(
            v.get("eta")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::InvalidParameter("bath missing eta".into()))?,
        )?,
        disorder_rel: decode_f64(
            v.get("disorder_rel")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::InvalidParameter("bath missing disorder_rel".into()))?,
        )?,
        seed: v
            .get("seed")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::InvalidParameter("bath missing seed".into()))?,
    };
    Ok(Bath {
        spec,
        site_fields: decode_vec(
            v.get("site_fields")
                .ok_or_else(|| Error::InvalidParameter("bath missing site_fields".into()))?,
            "site_fields",
        )?,
        energies: decode_vec(
            v.get("energies")
                .ok_or_else(|| Error::InvalidParameter("bath missing energies".into()))?,
            "energies",
        )?,
        configuration_energies: decode_vec(
            v.get("configuration_energies").ok_or_else(|| {
                Error::InvalidParameter("bath missing configuration_energies".into())
            })?,
            "configuration_energies",
        )?,
    })
}

pub fn eigensystem_to_json(eigs: &Eigensystem) -> Value {
    json!({
        "schema": "thermalab/eigensystem/v1",
        "dim": eigs.dim(),
        "dims": eigs.dims().map(|(s, b)| vec![s, b]),
        "eigenvalues": encode_vec(&eigs.eigenvalues),
        "eigenvectors": encode_matrix(&eigs.eigenvectors),
    })
}

pub fn eigensystem_from_json(v: &Value) -> Result<Eigensystem> {
    let eigenvalues = decode_vec(
        v.get("eigenvalues")
            .ok_or_else(|| Error::InvalidParameter("eigensystem missing eigenvalues".into()))?,
        "eigenvalues",
    )?;
    let eigenvectors = decode_matrix(
        v.get("eigenvectors")
            .ok_or_else(|| Error::InvalidParameter("eigensystem missing eigenvectors".into()))?,
        "eigenvectors",
    )?;
    let eigs = Eigensystem::new(eigenvalues, eigenvectors)?;
    match v.get("dims") {
        None | Some(Value::Null) => Ok(eigs),
        Some(d) => {
            let pair = d
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::InvalidParameter("dims must be a pair".into()))?;
            let d_s = pair[0].as_u64().unwrap_or(0) as usize;
            let d_b = pair[1].as_u64().unwrap_or(0) as usize;
            eigs.with_dims(d_s, d_b)
        }
    }
}

pub fn density_matrix_to_json(rho: &DensityMatrix) -> Value {
    json!({
        "schema": "thermalab/density-matrix/v1",
        "dim": rho.dim(),
        "dims": rho.dims().map(|(s, b)| vec![s, b]),
        "matrix": encode_matrix(rho.matrix()),
    })
}

pub fn density_matrix_from_json(v: &Value) -> Result<DensityMatrix> {
    let matrix = decode_matrix(
        v.get("matrix")
            .ok_or_else(|| Error::InvalidParameter("density matrix missing matrix".into()))?,
        "matrix",
    )?;
    let dims = match v.get("dims") {
        None | Some(Value::Null) => None,
        Some(d) => {
            let pair = d
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::InvalidParameter("dims must be a pair".into()))?;
            Some((
                pair[0].as_u64().unwrap_or(0) as usize,
                pair[1].as_u64().unwrap_or(0) as usize,
            ))
        }
    };
    DensityMatrix::new(matrix, dims)
}

/// CSV export of the spectrum of a state.
pub fn density_matrix_spectrum_csv(rho: &DensityMatrix) -> Result<String> {
    let mut table = crate::csv::Table::new(vec!["index", "eigenvalue"]);
    for (i, v) in rho.eigenvalues()?.iter().enumerate() {
        table.push_row(vec![i.to_string(), crate::csv::fmt_f64(*v)]);
    }
    Ok(table.to_csv())
}
