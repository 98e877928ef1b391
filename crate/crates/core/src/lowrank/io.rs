//! Binary persistence of the low-rank factors.
//!
//! Layout (all integers little-endian u64, all floats little-endian f64):
//!
//! ```text
//! offset  field
//! 0       magic  b"LRPSI\0\0\0"
//! 8       version = 1
//! 16      format tag: 1 = matrix, 2 = hierarchical Tucker
//! 24      dims / ranks / payload, format dependent:
//!   matrix: n_space, n_theta_half, n_oz, rank,
//!           space_basis (n_space * r), core (r * r), angle_basis (n_half * r)
//!   htt:    n_space, n_theta_half, n_oz, r1, r23, r2, r3,
//!           leaf_x (n_space * r1), leaf_oz (n_oz * r2),
//!           leaf_theta (n_theta_half * r3),
//!           transfer_23 (r2 * r3 * r23, first index fastest),
//!           transfer_root (r1 * r23)
//! ```
//!
//! Matrix payloads are column-major.

use super::{HTTensor, LowRankMatrix, Tensor3};
use crate::error::{Error, Result};
use faer::Mat;
use std::io::{Read, Write};

const MAGIC: &[u8; 8] = b"LRPSI\0\0\0";
const VERSION: u64 = 1;

/// Either low-rank container, for persistence and the CLI.
#[derive(Debug, Clone)]
pub enum StoredContainer {
    Matrix(LowRankMatrix),
    Htt(HTTensor),
}

fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn write_mat(w: &mut impl Write, m: &Mat<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_mat(r: &mut impl Read, nrows: usize, ncols: usize) -> Result<Mat<f64>> {
    let data = read_f64s(r, nrows * ncols)?;
    Ok(Mat::from_fn(nrows, ncols, |i, j| data[i + nrows * j]))
}

pub fn save_container(w: &mut impl Write, c: &StoredContainer) -> Result<()> {
    w.write_all(MAGIC)?;
    write_u64(w, VERSION)?;
    match c {
        StoredContainer::Matrix(m) => {
            write_u64(w, 1)?;
            write_u64(w, m.space_basis.nrows() as u64)?;
            write_u64(w, m.n_theta_half as u64)?;
            write_u64(w, m.n_oz as u64)?;
            write_u64(w, m.rank() as u64)?;
            write_mat(w, &m.space_basis)?;
            write_mat(w, &m.core)?;
            write_mat(w, &m.angle_basis)?;
        }
        StoredContainer::Htt(t) => {
            write_u64(w, 2)?;
            let (r1, r23, r2, r3) = t.ranks();
            write_u64(w, t.leaf_x.nrows() as u64)?;
            write_u64(w, t.leaf_theta.nrows() as u64)?;
            write_u64(w, t.leaf_oz.nrows() as u64)?;
            write_u64(w, r1 as u64)?;
            write_u64(w, r23 as u64)?;
            write_u64(w, r2 as u64)?;
            write_u64(w, r3 as u64)?;
            write_mat(w, &t.leaf_x)?;
            write_mat(w, &t.leaf_oz)?;
            write_mat(w, &t.leaf_theta)?;
            for v in &t.transfer_23.data {
                w.write_all(&v.to_le_bytes())?;
            }
            write_mat(w, &t.transfer_root)?;
        }
    }
    Ok(())
}

pub fn load_container(r: &mut impl Read) -> Result<StoredContainer> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config("not a low-rank factor dump".into()));
    }
    let version = read_u64(r)?;
    if version != VERSION {
        return Err(Error::Config(format!("unsupported dump version {version}")));
    }
    match read_u64(r)? {
        1 => {
            let n_space = read_u64(r)? as usize;
            let n_theta_half = read_u64(r)? as usize;
            let n_oz = read_u64(r)? as usize;
            let rank = read_u64(r)? as usize;
            let space_basis = read_mat(r, n_space, rank)?;
            let core = read_mat(r, rank, rank)?;
            let angle_basis = read_mat(r, n_theta_half * n_oz, rank)?;
            Ok(StoredContainer::Matrix(LowRankMatrix::from_factors(
                space_basis,
                core,
                angle_basis,
                n_theta_half,
                n_oz,
            )))
        }
        2 => {
            let n_space = read_u64(r)? as usize;
            let n_theta_half = read_u64(r)? as usize;
            let n_oz = read_u64(r)? as usize;
            let r1 = read_u64(r)? as usize;
            let r23 = read_u64(r)? as usize;
            let r2 = read_u64(r)? as usize;
            let r3 = read_u64(r)? as usize;
            let leaf_x = read_mat(r, n_space, r1)?;
            let leaf_oz = read_mat(r, n_oz, r2)?;
            let leaf_theta = read_mat(r, n_theta_half, r3)?;
            let data = read_f64s(r, r2 * r3 * r23)?;
            let transfer_23 = Tensor3 {
                d0: r2,
                d1: r3,
                d2: r23,
                data,
            };
            let transfer_root = read_mat(r, r1, r23)?;
            Ok(StoredContainer::Htt(HTTensor {
                leaf_x,
                leaf_oz,
                leaf_theta,
                transfer_23,
                transfer_root,
            }))
        }
        tag => Err(Error::Config(format!("unknown format tag {tag}"))),
    }
}
