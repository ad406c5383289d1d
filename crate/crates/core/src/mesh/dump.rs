//! Plain-text mesh dumps: a `nv nt` header, one `x y` line per vertex and one
//! `i j k tag indicator` line per triangle.

use std::io::{self, BufRead, Write};

use super::Mesh;

pub fn write_dump<W: Write>(mesh: &Mesh, indicators: Option<&[f64]>, mut out: W) -> io::Result<()> {
    writeln!(out, "{} {}", mesh.n_vertices(), mesh.n_triangles())?;
    for p in mesh.vertices() {
        writeln!(out, "{:e} {:e}", p[0], p[1])?;
    }
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let eta = indicators.map_or(0.0, |ind| ind[t]);
        writeln!(out, "{} {} {} {} {:e}", tri[0], tri[1], tri[2], u8::from(mesh.in_region(t)), eta)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshDump {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<bool>,
    pub indicators: Vec<f64>,
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn parse_dump<R: BufRead>(input: R) -> io::Result<MeshDump> {
    let mut lines = input.lines();
    let mut next = || -> io::Result<String> { lines.next().ok_or_else(|| bad("unexpected end of dump"))? };
    let header = next()?;
    let mut head = header.split_whitespace().map(str::parse::<usize>);
    let (Some(Ok(nv)), Some(Ok(nt))) = (head.next(), head.next()) else {
        return Err(bad(format!("bad header {header:?}")));
    };
    let mut dump = MeshDump { vertices: Vec::with_capacity(nv), triangles: Vec::with_capacity(nt), tags: Vec::new(), indicators: Vec::new() };
    for _ in 0..nv {
        let line = next()?;
        let v: Vec<f64> = line.split_whitespace().map(|s| s.parse().map_err(|_| bad(&line))).collect::<Result<_, _>>()?;
        let [x, y] = v[..] else { return Err(bad(line)) };
        dump.vertices.push([x, y]);
    }
    for _ in 0..nt {
        let line = next()?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(bad(line));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| bad(&line));
        dump.triangles.push([idx(f[0])?, idx(f[1])?, idx(f[2])?]);
        dump.tags.push(idx(f[3])? == 1);
        dump.indicators.push(f[4].parse().map_err(|_| bad(&line))?);
    }
    Ok(dump)
}
