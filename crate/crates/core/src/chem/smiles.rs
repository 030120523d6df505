//! SMILES reader: organic subset, bracket atoms, bonds, branches, ring closures
//! (including `%nn`) and dot-separated fragments. Stereo marks are dropped.

use super::graph::{BondOrder, MolBuilder, RawAtom};
use super::{ChemError, Element, MolGraph, Result};
use std::collections::BTreeMap;

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

fn syntax(position: usize, message: impl Into<String>) -> ChemError {
    ChemError::Syntax {
        position,
        message: message.into(),
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        (self.pos > start).then(|| {
            std::str::from_utf8(&self.text[start..self.pos])
                .unwrap()
                .parse()
                .unwrap()
        })
    }

    fn organic_atom(&mut self) -> Result<Option<RawAtom>> {
        let start = self.pos;
        let c = match self.peek() {
            Some(c) => c,
            None => return Ok(None),
        };
        let (symbol, aromatic, width) = match c {
            b'C' if self.text.get(self.pos + 1) == Some(&b'l') => ("Cl", false, 2),
            b'B' if self.text.get(self.pos + 1) == Some(&b'r') => ("Br", false, 2),
            b'B' => ("B", false, 1),
            b'C' => ("C", false, 1),
            b'N' => ("N", false, 1),
            b'O' => ("O", false, 1),
            b'P' => ("P", false, 1),
            b'S' => ("S", false, 1),
            b'F' => ("F", false, 1),
            b'I' => ("I", false, 1),
            b'b' => ("B", true, 1),
            b'c' => ("C", true, 1),
            b'n' => ("N", true, 1),
            b'o' => ("O", true, 1),
            b'p' => ("P", true, 1),
            b's' => ("S", true, 1),
            b'*' => return Err(ChemError::Unsupported("wildcard atom '*'".into())),
            _ => return Ok(None),
        };
        self.pos += width;
        let element = Element::from_symbol(symbol)
            .ok_or_else(|| syntax(start, format!("unknown element {symbol}")))?;
        Ok(Some(RawAtom {
            element,
            charge: 0,
            aromatic,
            bracket_h: None,
        }))
    }

    fn bracket_atom(&mut self) -> Result<RawAtom> {
        let open = self.pos;
        self.pos += 1; // '['
        if self.number().is_some() {
            return Err(ChemError::Unsupported("isotope labels".into()));
        }
        let start = self.pos;
        let first = self
            .bump()
            .ok_or_else(|| syntax(start, "unterminated bracket atom"))?;
        let (element, aromatic) = match first {
            b'*' => return Err(ChemError::Unsupported("wildcard atom '*'".into())),
            b'A'..=b'Z' => {
                let mut sym = String::from(first as char);
                if let Some(c @ b'a'..=b'z') = self.peek() {
                    let two = format!("{}{}", first as char, c as char);
                    if Element::from_symbol(&two).is_some() {
                        sym = two;
                        self.pos += 1;
                    }
                }
                let e = Element::from_symbol(&sym)
                    .ok_or_else(|| syntax(start, format!("unknown element {sym}")))?;
                (e, false)
            }
            b'a'..=b'z' => {
                let two = match (first, self.peek()) {
                    (b's', Some(b'e')) => Some(Element::from_symbol("Se").unwrap()),
                    (b'a', Some(b's')) => Some(Element::from_symbol("As").unwrap()),
                    _ => None,
                };
                if let Some(e) = two {
                    self.pos += 1;
                    (e, true)
                } else {
                    let sym = (first as char).to_ascii_uppercase().to_string();
                    let e = Element::from_symbol(&sym)
                        .filter(|e| e.can_be_aromatic())
                        .ok_or_else(|| {
                            syntax(start, format!("'{}' cannot be aromatic", first as char))
                        })?;
                    (e, true)
                }
            }
            other => {
                return Err(syntax(
                    start,
                    format!("unexpected '{}' in bracket atom", other as char),
                ))
            }
        };
        // Chirality marks are accepted and dropped.
        let mut chiral = false;
        while self.peek() == Some(b'@') {
            self.pos += 1;
            chiral = true;
        }
        if chiral && self.text[self.pos..].starts_with(b"TH")
            || chiral
                && [&b"AL"[..], b"SP", b"TB", b"OH"]
                    .iter()
                    .any(|c| self.text[self.pos..].starts_with(c))
        {
            self.pos += 2;
            self.number();
        }
        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = self.number().map_or(1, |n| n as u8);
        }
        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.number() {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
        }
        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.number().is_none() {
                return Err(syntax(self.pos, "atom class without number"));
            }
        }
        if self.bump() != Some(b']') {
            return Err(syntax(open, "unterminated bracket atom"));
        }
        let charge = i8::try_from(charge).map_err(|_| syntax(open, "charge out of range"))?;
        Ok(RawAtom {
            element,
            charge,
            aromatic,
            bracket_h: Some(hydrogens),
        })
    }
}

fn bond_symbol(c: u8) -> Option<Option<BondOrder>> {
    match c {
        b'-' => Some(Some(BondOrder::Single)),
        b'=' => Some(Some(BondOrder::Double)),
        b'#' => Some(Some(BondOrder::Triple)),
        b':' => Some(Some(BondOrder::Aromatic)),
        // Directional single bonds; the direction is discarded.
        b'/' | b'\\' => Some(None),
        _ => None,
    }
}

/// Parses a SMILES string into a hydrogen-suppressed, aromaticity-perceived graph.
pub fn parse_smiles(text: &str) -> Result<MolGraph> {
    let text = text.trim();
    if text.is_empty() {
        return Err(syntax(0, "empty SMILES"));
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
    };
    let mut builder = MolBuilder::new();
    let mut previous: Option<usize> = None;
    let mut branches: Vec<Option<usize>> = Vec::new();
    let mut pending_bond: Option<(usize, Option<BondOrder>)> = None;
    // ring number -> (atom, bond symbol at opening, position)
    let mut open_rings: BTreeMap<u32, (usize, Option<BondOrder>, usize)> = BTreeMap::new();
    let mut explicit_orders: Vec<Option<BondOrder>> = Vec::new();

    let connect = |builder: &mut MolBuilder,
                   orders: &mut Vec<Option<BondOrder>>,
                   a: usize,
                   b: usize,
                   order: Option<BondOrder>,
                   pos: usize|
     -> Result<()> {
        if a == b || builder.has_bond(a, b) {
            return Err(syntax(pos, "duplicate bond or self bond"));
        }
        builder.add_bond(a, b, order.unwrap_or(BondOrder::Single));
        orders.push(order);
        Ok(())
    };

    while let Some(c) = p.peek() {
        let here = p.pos;
        let atom = if c == b'[' {
            Some(p.bracket_atom()?)
        } else {
            p.organic_atom()?
        };
        if let Some(atom) = atom {
            let idx = builder.push_raw(atom);
            if let Some(prev) = previous {
                let order = pending_bond.take().and_then(|(_, o)| o);
                connect(&mut builder, &mut explicit_orders, prev, idx, order, here)?;
            } else if pending_bond.is_some() {
                return Err(syntax(here, "bond symbol without a preceding atom"));
            }
            previous = Some(idx);
            continue;
        }
        match c {
            b'(' => {
                if previous.is_none() || pending_bond.is_some() {
                    return Err(syntax(here, "branch without a preceding atom"));
                }
                branches.push(previous);
                p.pos += 1;
            }
            b')' => {
                if pending_bond.is_some() {
                    return Err(syntax(here, "dangling bond before ')'"));
                }
                previous = branches
                    .pop()
                    .ok_or_else(|| syntax(here, "unbalanced ')'"))?;
                p.pos += 1;
            }
            b'.' => {
                if pending_bond.is_some() || !branches.is_empty() {
                    return Err(syntax(here, "'.' inside a branch or after a bond"));
                }
                previous = None;
                p.pos += 1;
            }
            b'0'..=b'9' | b'%' => {
                let atom = previous.ok_or_else(|| syntax(here, "ring bond without an atom"))?;
                let number = if c == b'%' {
                    p.pos += 1;
                    let d = p.text.get(p.pos..p.pos + 2).filter(|d| d.iter().all(u8::is_ascii_digit));
                    let d = d.ok_or_else(|| syntax(here, "'%' must be followed by two digits"))?;
                    p.pos += 2;
                    (d[0] - b'0') as u32 * 10 + (d[1] - b'0') as u32
                } else {
                    p.pos += 1;
                    (c - b'0') as u32
                };
                let bond_here = pending_bond.take().and_then(|(_, o)| o);
                match open_rings.remove(&number) {
                    Some((other, bond_there, _)) => {
                        let order = match (bond_there, bond_here) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(syntax(here, "conflicting ring-closure bond orders"))
                            }
                            (a, b) => a.or(b),
                        };
                        connect(&mut builder, &mut explicit_orders, other, atom, order, here)?;
                    }
                    None => {
                        open_rings.insert(number, (atom, bond_here, here));
                    }
                }
            }
            _ => {
                if let Some(order) = bond_symbol(c) {
                    if pending_bond.is_some() {
                        return Err(syntax(here, "two consecutive bond symbols"));
                    }
                    pending_bond = Some((here, order));
                    p.pos += 1;
                } else {
                    return Err(syntax(here, format!("unexpected character '{}'", c as char)));
                }
            }
        }
    }
    if let Some((pos, _)) = pending_bond {
        return Err(syntax(pos, "dangling bond at end of input"));
    }
    if !branches.is_empty() {
        return Err(syntax(text.len(), "unclosed '('"));
    }
    if let Some((number, (_, _, pos))) = open_rings.into_iter().next() {
        return Err(syntax(pos, format!("unclosed ring bond {number}")));
    }

    // Bonds without a symbol are aromatic between two aromatic atoms, single otherwise.
    for (k, order) in explicit_orders.iter().enumerate() {
        if order.is_none() {
            let (a, b, _) = builder.bonds[k];
            if builder.atoms[a].aromatic && builder.atoms[b].aromatic {
                builder.bonds[k].2 = BondOrder::Aromatic;
            }
        }
    }
    builder.build()
}
