//! Text formats: KWB v1 basis definitions and HAMX v1 Hamiltonian files.
//!
//! HAMX v1 layout, `#` starting a comment anywhere on a line:
//!
//! ```text
//! HAMX 1
//! n <N>
//! qubits <q>
//! R <bohr>
//! sym <label>
//! basis <label>        optional
//! phys <m>             optional, leading physical levels when padded
//! kept <i> <j> ...     optional, raw basis indices kept by orthonormalization
//! grid <a,b,c>         optional, quadrature level
//! sha256 <hex>         optional, digest of the basis file
//! S [<m>]              optional, overlap block, m rows (default N)
//! HRAW <m>             optional, raw Hamiltonian block
//! H                    required, N rows
//! ```
//!
//! Blocks hold lower-triangle rows, row `i` carrying `i + 1` values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::ecbasis::{BasisSet, BasisTerm, GridLevel, Spin};
use crate::encode::{qubits_for, HamiltonianMatrix};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Non-empty content lines with comments stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let body = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn number<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} '{tok}'")))
}

fn single<'a>(toks: &[&'a str], line: usize) -> Result<&'a str> {
    match toks {
        [_, v] => Ok(v),
        _ => Err(parse_err(line, format!("'{}' takes exactly one value", toks[0]))),
    }
}

/// Parses a KWB v1 basis definition; repeated terms are an error.
pub fn parse_kwb(text: &str) -> Result<BasisSet> {
    let (bs, repeats) = parse_kwb_lenient(text)?;
    match repeats.first() {
        Some(&line) => Err(parse_err(line, "duplicate term")),
        None => Ok(bs),
    }
}

/// Parses a KWB v1 basis definition, keeping repeated terms and returning
/// the line numbers of the repeats.
pub fn parse_kwb_lenient(text: &str) -> Result<(BasisSet, Vec<usize>)> {
    let lines = content_lines(text);
    let mut params: [Option<f64>; 4] = [None; 4];
    let names = ["alpha", "alphabar", "beta", "betabar"];
    let mut spin = None;
    let mut terms = Vec::new();
    let mut last = 0;
    for (line, toks) in lines {
        last = line;
        match toks[0] {
            key if names.contains(&key) => {
                let k = names.iter().position(|n| *n == key).unwrap_or(0);
                if params[k].is_some() {
                    return Err(parse_err(line, format!("duplicate '{key}'")));
                }
                params[k] = Some(number(single(&toks, line)?, line, key)?);
            }
            "sign" => {
                let s: i32 = number(single(&toks, line)?.trim_start_matches('+'), line, "sign")?;
                spin = Some(Spin::from_sign(s).map_err(|e| parse_err(line, e.to_string()))?);
            }
            "term" => {
                if toks.len() != 6 {
                    return Err(parse_err(line, "term needs r rbar s sbar mu"));
                }
                let v: Vec<u32> = toks[1..].iter().map(|t| number(t, line, "exponent")).collect::<Result<_>>()?;
                let s = spin.ok_or_else(|| parse_err(line, "'sign' must precede terms"))?;
                terms.push((line, BasisTerm::new(v[0], v[1], v[2], v[3], v[4], s)));
            }
            other => return Err(parse_err(line, format!("unknown key '{other}'"))),
        }
    }
    let mut vals = [0.0; 4];
    for (k, p) in params.iter().enumerate() {
        vals[k] = p.ok_or_else(|| parse_err(last + 1, format!("missing '{}'", names[k])))?;
    }
    let line_of = terms.first().map_or(last, |t| t.0);
    let lines: Vec<usize> = terms.iter().map(|t| t.0).collect();
    let terms: Vec<BasisTerm> = terms.into_iter().map(|(_, t)| t).collect();
    let (bs, repeats) = BasisSet::allowing_repeats(vals[0], vals[1], vals[2], vals[3], terms)
        .map_err(|e| parse_err(line_of, e.to_string()))?;
    Ok((bs, repeats.into_iter().map(|k| lines[k]).collect()))
}

pub fn read_kwb(path: &Path) -> Result<BasisSet> {
    parse_kwb(&fs::read_to_string(path)?)
}

pub fn read_kwb_lenient(path: &Path) -> Result<(BasisSet, Vec<usize>)> {
    parse_kwb_lenient(&fs::read_to_string(path)?)
}

pub fn format_kwb(bs: &BasisSet) -> String {
    let mut out = String::from("# KWB v1\n");
    let _ = writeln!(out, "alpha {}\nalphabar {}\nbeta {}\nbetabar {}", bs.alpha, bs.alphabar, bs.beta, bs.betabar);
    let sign = bs.terms().first().map_or(Spin::Singlet, |t| t.spin);
    let _ = writeln!(out, "sign {}", if sign == Spin::Singlet { "+1" } else { "-1" });
    for t in bs.terms() {
        let _ = writeln!(out, "term {} {} {} {} {}", t.r, t.rbar, t.s, t.sbar, t.mu);
    }
    out
}

/// Contents of a HAMX v1 file.
#[derive(Debug, Clone, PartialEq)]
pub struct HamxFile {
    /// The `H` block, with R, symmetry, basis label and physical dimension.
    pub hamiltonian: HamiltonianMatrix,
    pub overlap: Option<Matrix>,
    pub raw_hamiltonian: Option<Matrix>,
    pub kept: Option<Vec<usize>>,
    pub grid: Option<GridLevel>,
    pub basis_sha256: Option<String>,
}

impl HamxFile {
    pub fn new(hamiltonian: HamiltonianMatrix) -> Self {
        Self { hamiltonian, overlap: None, raw_hamiltonian: None, kept: None, grid: None, basis_sha256: None }
    }
}

fn write_block(out: &mut String, m: &Matrix) {
    for i in 0..m.rows() {
        let row: Vec<String> = (0..=i).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn label(s: &str) -> String {
    let s: String = s.split_whitespace().collect::<Vec<_>>().join("_").replace('#', "_");
    if s.is_empty() { "none".into() } else { s }
}

pub fn format_hamx(f: &HamxFile) -> String {
    let h = &f.hamiltonian;
    let n = h.dim();
    let mut out = String::from("HAMX 1\n");
    let _ = writeln!(out, "n {n}\nqubits {}\nR {:.16e}\nsym {}", qubits_for(n), h.r_bohr, label(&h.symmetry));
    let _ = writeln!(out, "basis {}", label(&h.basis));
    if h.physical_dim() < n {
        let _ = writeln!(out, "phys {}", h.physical_dim());
    }
    if let Some(k) = &f.kept {
        let idx: Vec<String> = k.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "kept {}", idx.join(" "));
    }
    if let Some(g) = f.grid {
        let _ = writeln!(out, "grid {g}");
    }
    if let Some(s) = &f.basis_sha256 {
        let _ = writeln!(out, "sha256 {s}");
    }
    if let Some(s) = &f.overlap {
        let _ = writeln!(out, "S {}", s.rows());
        write_block(&mut out, s);
    }
    if let Some(raw) = &f.raw_hamiltonian {
        let _ = writeln!(out, "HRAW {}", raw.rows());
        write_block(&mut out, raw);
    }
    out.push_str("H\n");
    write_block(&mut out, h.matrix());
    out
}

pub fn write_hamx(path: &Path, f: &HamxFile) -> Result<()> {
    fs::write(path, format_hamx(f))?;
    Ok(())
}

fn read_block<'a>(
    lines: &mut impl Iterator<Item = (usize, Vec<&'a str>)>,
    dim: usize,
    name: &str,
    header_line: usize,
) -> Result<Matrix> {
    let mut m = Matrix::zeros(dim, dim);
    for i in 0..dim {
        let (line, toks) = lines
            .next()
            .ok_or_else(|| parse_err(header_line, format!("block {name} ends after {i} of {dim} rows")))?;
        if toks.len() != i + 1 {
            return Err(parse_err(line, format!("row {i} of block {name} has {} values, expected {}", toks.len(), i + 1)));
        }
        for (j, t) in toks.iter().enumerate() {
            let v: f64 = number(t, line, "matrix entry")?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite entry '{t}'")));
            }
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

pub fn parse_hamx(text: &str) -> Result<HamxFile> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, t)) if t == ["HAMX", "1"] => {}
        Some((line, _)) => return Err(parse_err(line, "missing 'HAMX 1' header")),
        None => return Err(parse_err(1, "empty HAMX file")),
    }
    let mut n: Option<usize> = None;
    let mut qubits: Option<(usize, usize)> = None;
    let mut r: Option<f64> = None;
    let mut sym: Option<String> = None;
    let mut basis = String::from("none");
    let mut phys: Option<(usize, usize)> = None;
    let mut out = HamxFile::new(HamiltonianMatrix::from_matrix(Matrix::identity(1))?);
    let mut h: Option<Matrix> = None;
    let mut last = 1;
    while let Some((line, toks)) = lines.next() {
        last = line;
        let need_n = || n.ok_or_else(|| parse_err(line, "'n' must precede blocks"));
        match toks[0] {
            "n" => n = Some(number(single(&toks, line)?, line, "dimension")?),
            "qubits" => qubits = Some((number(single(&toks, line)?, line, "qubit count")?, line)),
            "R" => r = Some(number(single(&toks, line)?, line, "R")?),
            "sym" => sym = Some(single(&toks, line)?.to_string()),
            "basis" => basis = single(&toks, line)?.to_string(),
            "phys" => phys = Some((number(single(&toks, line)?, line, "physical dimension")?, line)),
            "kept" => out.kept = Some(toks[1..].iter().map(|t| number(t, line, "index")).collect::<Result<_>>()?),
            "grid" => out.grid = Some(single(&toks, line)?.parse().map_err(|e: Error| parse_err(line, e.to_string()))?),
            "sha256" => out.basis_sha256 = Some(single(&toks, line)?.to_string()),
            "S" | "HRAW" | "H" => {
                let dim = match toks.len() {
                    1 if toks[0] != "HRAW" => need_n()?,
                    2 => number(toks[1], line, "block size")?,
                    _ => return Err(parse_err(line, format!("bad block header for {}", toks[0]))),
                };
                if toks[0] == "H" && dim != need_n()? {
                    return Err(parse_err(line, format!("block H has size {dim}, header says n = {}", need_n()?)));
                }
                let m = read_block(&mut lines, dim, toks[0], line)?;
                let slot = match toks[0] {
                    "S" => &mut out.overlap,
                    "HRAW" => &mut out.raw_hamiltonian,
                    _ => &mut h,
                };
                if slot.replace(m).is_some() {
                    return Err(parse_err(line, format!("duplicate block {}", toks[0])));
                }
            }
            other => return Err(parse_err(line, format!("unknown key '{other}'"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(last, "missing 'n'"))?;
    let h = h.ok_or_else(|| parse_err(last, "missing block H"))?;
    let r = r.ok_or_else(|| parse_err(last, "missing 'R'"))?;
    let sym = sym.ok_or_else(|| parse_err(last, "missing 'sym'"))?;
    match qubits {
        Some((q, _)) if q == qubits_for(n) => {}
        Some((q, line)) => return Err(parse_err(line, format!("qubits {q} inconsistent with n = {n}"))),
        None => return Err(parse_err(last, "missing 'qubits'")),
    }
    let mut ham = HamiltonianMatrix::new(h, r, sym, basis)?;
    if let Some((p, line)) = phys {
        ham = ham.with_physical_dim(p).map_err(|e| parse_err(line, e.to_string()))?;
    }
    out.hamiltonian = ham;
    Ok(out)
}

pub fn read_hamx(path: &Path) -> Result<HamxFile> {
    parse_hamx(&fs::read_to_string(path)?)
}
