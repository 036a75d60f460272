//! OBJ and ASCII PLY reading and writing, with a JSON sidecar for constraints.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Constraint, Curve, TriMesh};
use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Serialize, Deserialize)]
struct LoopTags {
    loop_id: usize,
    vertices: Vec<usize>,
    curve_id: Vec<Option<usize>>,
    params: Vec<Option<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    curves: Vec<Curve>,
    loops: Vec<LoopTags>,
    /// Constrained vertices not on any boundary loop.
    other: Vec<(usize, usize, f64)>,
}

/// Sidecar file holding boundary constraints for a mesh file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".tags.json");
    PathBuf::from(s)
}

/// Write OBJ or PLY (by extension) plus the constraint sidecar.
pub fn save_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    let text = match extension(path)?.as_str() {
        "obj" => write_obj(mesh),
        "ply" => write_ply(mesh),
        other => {
            return Err(Error::InvalidParameter(format!("unsupported mesh extension '{other}'")))
        }
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    let side = sidecar(mesh);
    let json = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    let sp = sidecar_path(path);
    fs::write(&sp, json).map_err(|e| Error::io(&sp, e))
}

/// Read a mesh; warnings (such as dangling vertices) are discarded.
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    load_mesh_with_warnings(path).map(|(m, _)| m)
}

/// Read a mesh and report non-fatal issues.
pub fn load_mesh_with_warnings(path: &Path) -> Result<(TriMesh, Vec<String>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (pos, faces) = match extension(path)?.as_str() {
        "obj" => parse_obj(&text, path)?,
        "ply" => parse_ply(&text, path)?,
        other => {
            return Err(Error::InvalidParameter(format!("unsupported mesh extension '{other}'")))
        }
    };
    let mut mesh = TriMesh::new(pos, faces)?;
    let mut warnings = Vec::new();
    if !mesh.isolated_vertices().is_empty() {
        warnings.push(format!(
            "{} isolated vertices (referenced by no face)",
            mesh.isolated_vertices().len()
        ));
    }
    let sp = sidecar_path(path);
    if sp.exists() {
        let s = fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
        let side: Sidecar = serde_json::from_str(&s).map_err(|e| Error::Parse {
            path: sp.clone(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        apply_sidecar(&mut mesh, side, &sp)?;
    }
    Ok((mesh, warnings))
}

fn extension(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no extension", path.display())))
}

fn sidecar(mesh: &TriMesh) -> Sidecar {
    let mut on_loop = vec![false; mesh.num_vertices()];
    let loops = mesh
        .boundary_loops()
        .iter()
        .enumerate()
        .map(|(i, lp)| {
            let mut curve_id = Vec::with_capacity(lp.len());
            let mut params = Vec::with_capacity(lp.len());
            for &v in lp {
                on_loop[v] = true;
                match mesh.tags()[v] {
                    Constraint::OnCurve { curve, param } => {
                        curve_id.push(Some(curve));
                        params.push(Some(param));
                    }
                    Constraint::Free => {
                        curve_id.push(None);
                        params.push(None);
                    }
                }
            }
            LoopTags {
                loop_id: i,
                vertices: lp.clone(),
                curve_id,
                params,
            }
        })
        .collect();
    let other = mesh
        .tags()
        .iter()
        .enumerate()
        .filter_map(|(v, t)| match *t {
            Constraint::OnCurve { curve, param } if !on_loop[v] => Some((v, curve, param)),
            _ => None,
        })
        .collect();
    Sidecar {
        curves: mesh.curves().to_vec(),
        loops,
        other,
    }
}

fn apply_sidecar(mesh: &mut TriMesh, side: Sidecar, path: &Path) -> Result<()> {
    let nv = mesh.num_vertices();
    let ncurves = side.curves.len();
    let bad = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg,
    };
    let mut tags = vec![Constraint::Free; nv];
    for lt in &side.loops {
        if lt.vertices.len() != lt.curve_id.len() || lt.vertices.len() != lt.params.len() {
            return Err(bad(format!("loop {} has mismatched array lengths", lt.loop_id)));
        }
        for ((&v, c), p) in lt.vertices.iter().zip(&lt.curve_id).zip(&lt.params) {
            if v >= nv {
                return Err(bad(format!("vertex {v} out of range")));
            }
            if let (Some(c), Some(p)) = (c, p) {
                if *c >= ncurves {
                    return Err(bad(format!("curve {c} out of range")));
                }
                tags[v] = Constraint::OnCurve { curve: *c, param: *p };
            }
        }
    }
    for &(v, c, p) in &side.other {
        if v >= nv || c >= ncurves {
            return Err(bad(format!("constraint ({v}, {c}) out of range")));
        }
        tags[v] = Constraint::OnCurve { curve: c, param: p };
    }
    mesh.set_curves(side.curves);
    mesh.set_tags(tags)
}

fn write_obj(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.num_vertices() * 48 + mesh.num_faces() * 24);
    for p in mesh.positions() {
        let _ = writeln!(s, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

fn write_ply(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "ply\nformat ascii 1.0");
    let _ = writeln!(s, "element vertex {}", mesh.num_vertices());
    let _ = writeln!(s, "property double x\nproperty double y\nproperty double z");
    let _ = writeln!(s, "element face {}", mesh.num_faces());
    let _ = writeln!(s, "property list uchar int vertex_indices\nend_header");
    for p in mesh.positions() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

type Parsed = (Vec<Vec3>, Vec<[usize; 3]>);

fn parse_obj(text: &str, path: &Path) -> Result<Parsed> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut pos = Vec::new();
    let mut faces = Vec::new();
    let mut pending_faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<&str> = it.collect();
                if c.len() < 3 {
                    return Err(err(ln, format!("vertex needs 3 coordinates, found {}", c.len())));
                }
                let mut xyz = [0.0; 3];
                for k in 0..3 {
                    xyz[k] = c[k]
                        .parse::<f64>()
                        .map_err(|e| err(ln, format!("bad coordinate '{}': {e}", c[k])))?;
                }
                pos.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let idx: Vec<&str> = it.collect();
                if idx.len() < 3 {
                    return Err(err(ln, format!("face needs at least 3 vertices, found {}", idx.len())));
                }
                let mut poly = Vec::with_capacity(idx.len());
                for tok in idx {
                    let first = tok.split('/').next().unwrap_or("");
                    let n: i64 = first
                        .parse()
                        .map_err(|e| err(ln, format!("bad vertex index '{tok}': {e}")))?;
                    poly.push((n, ln));
                }
                pending_faces.push(poly);
            }
            _ => {}
        }
    }
    let nv = pos.len() as i64;
    for poly in pending_faces {
        let ln = poly[0].1;
        let mut ids = Vec::with_capacity(poly.len());
        for (n, _) in poly {
            let v = if n > 0 { n - 1 } else { nv + n };
            if v < 0 || v >= nv {
                return Err(err(ln, format!("vertex index {n} out of range (have {nv})")));
            }
            ids.push(v as usize);
        }
        for j in 1..ids.len() - 1 {
            faces.push([ids[0], ids[j], ids[j + 1]]);
        }
    }
    Ok((pos, faces))
}

fn parse_ply(text: &str, path: &Path) -> Result<Parsed> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        Some((ln, _)) => return Err(err(ln, "missing 'ply' magic".into())),
        None => return Err(err(1, "empty file".into())),
    }
    let mut nv = None;
    let mut nf = None;
    let mut vertex_props = 0usize;
    let mut current = "";
    let mut last = 1;
    loop {
        let (ln, l) = lines.next().ok_or_else(|| err(last + 1, "unterminated header".into()))?;
        last = ln;
        let t: Vec<&str> = l.split_whitespace().collect();
        match t.as_slice() {
            ["format", "ascii", _] => {}
            ["format", f, ..] => return Err(err(ln, format!("unsupported format '{f}'"))),
            ["element", "vertex", n] => {
                nv = Some(n.parse::<usize>().map_err(|e| err(ln, e.to_string()))?);
                current = "vertex";
            }
            ["element", "face", n] => {
                nf = Some(n.parse::<usize>().map_err(|e| err(ln, e.to_string()))?);
                current = "face";
            }
            ["element", ..] => current = "other",
            ["property", ..] if current == "vertex" => vertex_props += 1,
            ["end_header"] => break,
            _ => {}
        }
    }
    let nv = nv.ok_or_else(|| err(last, "no vertex element".into()))?;
    let nf = nf.unwrap_or(0);
    if vertex_props < 3 {
        return Err(err(last, "vertex element needs x, y, z".into()));
    }
    let mut pos = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(last + 1, format!("expected {nv} vertices, file ended")))?;
        last = ln;
        let c: Vec<&str> = l.split_whitespace().collect();
        if c.len() < 3 {
            return Err(err(ln, "vertex line needs 3 values".into()));
        }
        let mut xyz = [0.0; 3];
        for k in 0..3 {
            xyz[k] = c[k].parse().map_err(|e| err(ln, format!("bad coordinate: {e}")))?;
        }
        pos.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(last + 1, format!("expected {nf} faces, file ended")))?;
        last = ln;
        let c: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(ln, format!("bad face entry: {e}")))?;
        if c.is_empty() || c.len() != c[0] + 1 || c[0] < 3 {
            return Err(err(ln, "malformed face list".into()));
        }
        if c[1..].iter().any(|&v| v >= nv) {
            return Err(err(ln, "face index out of range".into()));
        }
        for j in 2..c[0] {
            faces.push([c[1], c[j], c[j + 1]]);
        }
    }
    Ok((pos, faces))
}
