use std::collections::HashMap;

use super::{normalize_element, Atom, Bond, BondOrder, MolError, Molecule};

#[derive(PartialEq)]
enum Section {
    None,
    Molecule,
    Atom,
    Bond,
    Other,
}

fn malformed(line: usize, reason: impl Into<String>) -> MolError {
    MolError::MalformedRecord { line, reason: reason.into() }
}

fn parse_bond_type(raw: &str, line: usize) -> Result<BondOrder, MolError> {
    match raw.to_ascii_lowercase().as_str() {
        "1" => Ok(BondOrder::Single),
        "2" => Ok(BondOrder::Double),
        "3" => Ok(BondOrder::Triple),
        "ar" => Ok(BondOrder::Aromatic),
        "am" => Ok(BondOrder::Amide),
        other => Err(malformed(line, format!("unsupported bond type '{other}'"))),
    }
}

/// Parses the first molecule of a TRIPOS mol2 file.
///
/// Atom ids are re-based to 0 in file order. Sections other than MOLECULE,
/// ATOM and BOND are skipped.
pub fn parse_mol2(text: &str) -> Result<Molecule, MolError> {
    let mut section = Section::None;
    let mut seen_molecule = false;
    let mut seen_atom = false;
    let mut seen_bond = false;
    let mut name = String::new();
    let mut molecule_line = 0usize;
    let mut declared: Option<(usize, usize, usize)> = None;
    let mut atoms: Vec<Atom> = Vec::new();
    let mut tripos_id: HashMap<i64, usize> = HashMap::new();
    let mut raw_bonds: Vec<(usize, i64, i64, BondOrder)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if let Some(tag) = line.strip_prefix("@<TRIPOS>") {
            let tag = tag.trim().to_ascii_uppercase();
            if tag == "MOLECULE" && seen_molecule {
                // Only the first molecule of a multi-molecule file is read.
                break;
            }
            section = match tag.as_str() {
                "MOLECULE" => {
                    seen_molecule = true;
                    molecule_line = 0;
                    Section::Molecule
                }
                "ATOM" => {
                    seen_atom = true;
                    Section::Atom
                }
                "BOND" => {
                    seen_bond = true;
                    Section::Bond
                }
                other => {
                    log::warn!("mol2 line {line_no}: skipping unsupported section {other}");
                    Section::Other
                }
            };
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        match section {
            Section::Molecule => {
                molecule_line += 1;
                match molecule_line {
                    1 => name = line.to_string(),
                    2 => {
                        let nums: Vec<usize> = line
                            .split_whitespace()
                            .map(|t| t.parse::<usize>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| malformed(line_no, "counts line is not numeric"))?;
                        if nums.is_empty() {
                            return Err(malformed(line_no, "empty counts line"));
                        }
                        declared = Some((line_no, nums[0], nums.get(1).copied().unwrap_or(0)));
                    }
                    _ => {}
                }
            }
            Section::Atom => {
                if line.is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < 6 {
                    return Err(malformed(line_no, "atom record needs at least 6 fields"));
                }
                let id: i64 =
                    fields[0].parse().map_err(|_| malformed(line_no, format!("bad atom id '{}'", fields[0])))?;
                let mut pos = [0.0; 3];
                for (k, slot) in pos.iter_mut().enumerate() {
                    let v: f64 = fields[2 + k]
                        .parse()
                        .map_err(|_| malformed(line_no, format!("bad coordinate '{}'", fields[2 + k])))?;
                    if !v.is_finite() {
                        return Err(malformed(line_no, "non-finite coordinate"));
                    }
                    *slot = v;
                }
                let element = normalize_element(fields[5]);
                if element.is_empty() {
                    return Err(malformed(line_no, "empty atom type"));
                }
                let new_id = atoms.len();
                if tripos_id.insert(id, new_id).is_some() {
                    return Err(malformed(line_no, format!("duplicate atom id {id}")));
                }
                atoms.push(Atom { id: new_id, element, position: pos });
            }
            Section::Bond => {
                if line.is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < 4 {
                    return Err(malformed(line_no, "bond record needs at least 4 fields"));
                }
                let a: i64 =
                    fields[1].parse().map_err(|_| malformed(line_no, format!("bad atom reference '{}'", fields[1])))?;
                let b: i64 =
                    fields[2].parse().map_err(|_| malformed(line_no, format!("bad atom reference '{}'", fields[2])))?;
                let order = parse_bond_type(fields[3], line_no)?;
                raw_bonds.push((line_no, a, b, order));
            }
            Section::None | Section::Other => {}
        }
    }

    if !seen_molecule {
        return Err(MolError::MissingSection("@<TRIPOS>MOLECULE".into()));
    }
    if !seen_atom {
        return Err(MolError::MissingSection("@<TRIPOS>ATOM".into()));
    }
    if !seen_bond && atoms.len() > 1 {
        return Err(MolError::MissingSection("@<TRIPOS>BOND".into()));
    }
    if let Some((line, n_atoms, n_bonds)) = declared {
        if n_atoms != atoms.len() {
            return Err(malformed(line, format!("declares {n_atoms} atoms but {} were read", atoms.len())));
        }
        if seen_bond && n_bonds != raw_bonds.len() {
            return Err(malformed(line, format!("declares {n_bonds} bonds but {} were read", raw_bonds.len())));
        }
    }

    let mut bonds = Vec::with_capacity(raw_bonds.len());
    for (line, a, b, order) in raw_bonds {
        let ia = *tripos_id.get(&a).ok_or(MolError::DanglingBond { line, atom: a })?;
        let ib = *tripos_id.get(&b).ok_or(MolError::DanglingBond { line, atom: b })?;
        if ia == ib {
            return Err(malformed(line, "bond joins an atom to itself"));
        }
        bonds.push(Bond::new(ia, ib, order));
    }
    Molecule::new(name, atoms, bonds)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
@<TRIPOS>MOLECULE
dimer
2 1 0 0 0
SMALL
NO_CHARGES

@<TRIPOS>ATOM
      1 C1    0.0000  0.0000  0.0000 C.3  1 LIG 0.0
      2 O1    1.4300  0.0000  0.0000 O.3  1 LIG 0.0
@<TRIPOS>BOND
     1     1     2 1
";

    #[test]
    fn minimal_two_atom_block() {
        let m = parse_mol2(MINIMAL).unwrap();
        assert_eq!(m.name, "dimer");
        assert_eq!(m.atom_count(), 2);
        assert_eq!(m.bonds.len(), 1);
        assert_eq!(m.bonds[0].order, BondOrder::Single);
        assert_eq!((m.bonds[0].a, m.bonds[0].b), (0, 1));
        assert_eq!(m.atoms[1].position, [1.43, 0.0, 0.0]);
        assert_eq!(m.atoms[1].element, "O");
    }

    #[test]
    fn aromatic_bond_code() {
        let text = MINIMAL.replace("     1     1     2 1", "     1     1     2 ar");
        let m = parse_mol2(&text).unwrap();
        assert_eq!(m.bonds[0].order, BondOrder::Aromatic);
        let text = MINIMAL.replace("     1     1     2 1", "     1     1     2 am");
        assert_eq!(parse_mol2(&text).unwrap().bonds[0].order, BondOrder::Amide);
    }

    #[test]
    fn dangling_bond_is_reported() {
        let text = MINIMAL.replace("     1     1     2 1", "     1     1     7 1");
        assert_eq!(parse_mol2(&text), Err(MolError::DanglingBond { line: 11, atom: 7 }));
    }

    #[test]
    fn malformed_coordinate_reports_line() {
        let text = MINIMAL.replace("1.4300", "1.4x00");
        match parse_mol2(&text) {
            Err(MolError::MalformedRecord { line, .. }) => assert_eq!(line, 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_atom_section() {
        let text = "@<TRIPOS>MOLECULE\nx\n0 0\n";
        assert!(matches!(parse_mol2(text), Err(MolError::MissingSection(_))));
        assert!(matches!(parse_mol2("garbage"), Err(MolError::MissingSection(_))));
    }

    #[test]
    fn unknown_sections_are_skipped() {
        let text = format!("{MINIMAL}@<TRIPOS>SUBSTRUCTURE\n 1 LIG 1 TEMP 0 **** **** 0 ROOT\n");
        assert_eq!(parse_mol2(&text).unwrap().atom_count(), 2);
    }

    #[test]
    fn parsing_is_deterministic() {
        assert_eq!(parse_mol2(MINIMAL).unwrap(), parse_mol2(MINIMAL).unwrap());
    }
}
