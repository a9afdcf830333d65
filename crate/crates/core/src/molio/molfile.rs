use super::{normalize_element, Atom, Bond, BondOrder, MolError, Molecule};

fn malformed(line: usize, reason: impl Into<String>) -> MolError {
    MolError::MalformedRecord { line, reason: reason.into() }
}

/// Reads a fixed-width integer column, falling back to whitespace splitting
/// for files that do not respect the column layout.
fn fixed_int(line: &str, start: usize, end: usize) -> Option<i64> {
    line.get(start..end.min(line.len())).and_then(|s| s.trim().parse().ok())
}

/// Parses an MDL molfile (V2000 connection table).
pub fn parse_mol(text: &str) -> Result<Molecule, MolError> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 4 {
        return Err(MolError::MissingSection("V2000 header and counts line".into()));
    }
    let name = lines[0].trim().to_string();
    let counts = lines[3];
    if counts.contains("V3000") {
        return Err(malformed(4, "V3000 connection tables are not supported"));
    }
    let (n_atoms, n_bonds) = match (fixed_int(counts, 0, 3), fixed_int(counts, 3, 6)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            let mut it = counts.split_whitespace().map(|t| t.parse::<i64>());
            match (it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b))) => (a, b),
                _ => return Err(malformed(4, "counts line needs atom and bond counts")),
            }
        }
    };
    if n_atoms < 0 || n_bonds < 0 {
        return Err(malformed(4, "negative counts"));
    }
    let (n_atoms, n_bonds) = (n_atoms as usize, n_bonds as usize);

    let mut atoms = Vec::with_capacity(n_atoms);
    for i in 0..n_atoms {
        let line_no = 5 + i;
        let line = lines
            .get(4 + i)
            .copied()
            .filter(|l| !l.trim().is_empty() && !l.starts_with("M  "))
            .ok_or_else(|| malformed(line_no, format!("expected {n_atoms} atom lines, found {i}")))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(malformed(line_no, "atom line needs x y z and a symbol"));
        }
        let mut pos = [0.0; 3];
        for (k, slot) in pos.iter_mut().enumerate() {
            let v: f64 =
                fields[k].parse().map_err(|_| malformed(line_no, format!("bad coordinate '{}'", fields[k])))?;
            if !v.is_finite() {
                return Err(malformed(line_no, "non-finite coordinate"));
            }
            *slot = v;
        }
        let element = normalize_element(fields[3]);
        if element.is_empty() || !element.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(malformed(line_no, format!("bad element symbol '{}'", fields[3])));
        }
        atoms.push(Atom { id: i, element, position: pos });
    }

    let mut bonds = Vec::with_capacity(n_bonds);
    for j in 0..n_bonds {
        let idx = 4 + n_atoms + j;
        let line_no = idx + 1;
        let line = lines
            .get(idx)
            .copied()
            .filter(|l| !l.trim().is_empty() && !l.starts_with("M  "))
            .ok_or_else(|| malformed(line_no, format!("expected {n_bonds} bond lines, found {j}")))?;
        let (a, b, t) = match (fixed_int(line, 0, 3), fixed_int(line, 3, 6), fixed_int(line, 6, 9)) {
            (Some(a), Some(b), Some(t)) => (a, b, t),
            _ => {
                let f: Vec<i64> = line
                    .split_whitespace()
                    .take(3)
                    .map(|t| t.parse::<i64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| malformed(line_no, "bond line needs two atom indices and a type"))?;
                if f.len() < 3 {
                    return Err(malformed(line_no, "bond line needs two atom indices and a type"));
                }
                (f[0], f[1], f[2])
            }
        };
        for atom in [a, b] {
            if atom < 1 || atom as usize > n_atoms {
                return Err(MolError::DanglingBond { line: line_no, atom });
            }
        }
        if a == b {
            return Err(malformed(line_no, "bond joins an atom to itself"));
        }
        let order = match t {
            1 => BondOrder::Single,
            2 => BondOrder::Double,
            3 => BondOrder::Triple,
            4 => BondOrder::Aromatic,
            other => return Err(malformed(line_no, format!("unsupported bond type {other}"))),
        };
        bonds.push(Bond::new(a as usize - 1, b as usize - 1, order));
    }
    Molecule::new(name, atoms, bonds)
}
