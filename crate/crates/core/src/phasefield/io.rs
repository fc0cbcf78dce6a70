//! Raw field dumps: `<stem>.bin` holds the node values as little-endian `f64`
//! (node-major, components innermost) and `<stem>.hdr` a `key=value` text header.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Boundary, Field, SpaceGrid};
use crate::error::{Error, Result};

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".bin"), with(".hdr"))
}

fn join(v: &[impl ToString]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn write_field(field: &Field, stem: &Path) -> Result<()> {
    let (bin, hdr) = paths(stem);
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(bin, bytes)?;
    let g = &field.grid;
    let boundary = if field.is_fixed() { "fixed" } else { "free" };
    let text = format!(
        "shape={}\nlower={}\nupper={}\nspacing={}\ncomponents={}\nboundary={}\ndtype=f64le\n",
        join(g.shape()),
        join(g.lower()),
        join(g.upper()),
        join(&g.spacing()),
        field.phase_dim(),
        boundary
    );
    fs::write(hdr, text)?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("bad header entry {x:?}"))))
        .collect()
}

pub fn read_field(stem: &Path) -> Result<Field> {
    let (bin, hdr) = paths(stem);
    let text = fs::read_to_string(hdr)?;
    let get = |key: &str| -> Result<&str> {
        text.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| Error::Config(format!("header lacks {key}")))
    };
    let grid = SpaceGrid::new(parse_list(get("lower")?)?, parse_list(get("upper")?)?, parse_list(get("shape")?)?)?;
    let m: usize = get("components")?
        .trim()
        .parse()
        .map_err(|_| Error::Config("bad component count".into()))?;
    let bytes = fs::read(bin)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Config("field dump is not a whole number of f64".into()));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = Field::new(grid, m, values, Boundary::Free)?;
    Ok(if get("boundary")?.trim() == "fixed" {
        field.with_fixed_trace()
    } else {
        field
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpaceGrid::rect([0.0, -1.0], [1.0, 1.0], [4, 3]).unwrap();
        let f = Field::from_fn(g, 2, |x| vec![x[0].sin(), x[1] / 3.0]).unwrap().with_fixed_trace();
        let stem = dir.path().join("u_eps0.01");
        write_field(&f, &stem).unwrap();
        assert_eq!(fs::metadata(dir.path().join("u_eps0.01.bin")).unwrap().len(), 12 * 2 * 8);
        assert_eq!(read_field(&stem).unwrap(), f);
    }
}
