//! Helpers shared by the integration tests: brute-force argumentation
//! semantics over bitmasks, and random framework / RDF generators.
//!
//! The oracle works straight from the definitions (conflict-freeness,
//! defense, completeness) and never calls into the crate's solver.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::Rng;
use rashomon::argumentation::{AttackGraph, Extension};
use rashomon::kgstore::{Iri, Literal, PrefixMap, RdfTerm, Triple};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// A framework over arguments `0..n`; `attackers[b]` has bit `a` set when `a` attacks `b`.
#[derive(Debug, Clone)]
pub struct Bitframe {
    pub n: usize,
    pub attackers: Vec<u32>,
}

impl Bitframe {
    pub fn random(rng: &mut impl Rng, max_args: usize) -> Self {
        let n = rng.random_range(0..=max_args);
        let density: f64 = rng.random_range(0.0..0.6);
        let mut attackers = vec![0u32; n];
        for mask in attackers.iter_mut() {
            for a in 0..n {
                if rng.random_bool(density) {
                    *mask |= 1 << a;
                }
            }
        }
        Self { n, attackers }
    }

    pub fn name(i: usize) -> String {
        format!("a{i}")
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for b in 0..self.n {
            for a in 0..self.n {
                if self.attackers[b] & (1 << a) != 0 {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn to_graph(&self) -> AttackGraph {
        let names: Vec<String> = (0..self.n).map(Self::name).collect();
        let edges: Vec<(String, String)> = self
            .edges()
            .into_iter()
            .map(|(a, b)| (Self::name(a), Self::name(b)))
            .collect();
        AttackGraph::from_parts(names, edges).expect("valid framework")
    }

    fn attacks_set(&self, s: u32, target: usize) -> bool {
        self.attackers[target] & s != 0
    }

    pub fn conflict_free(&self, s: u32) -> bool {
        (0..self.n).all(|b| s & (1 << b) == 0 || !self.attacks_set(s, b))
    }

    /// Every attacker of `a` is attacked by some member of `s`.
    pub fn defends(&self, s: u32, a: usize) -> bool {
        (0..self.n)
            .filter(|x| self.attackers[a] & (1 << x) != 0)
            .all(|x| self.attacks_set(s, x))
    }

    pub fn characteristic(&self, s: u32) -> u32 {
        (0..self.n).filter(|&a| self.defends(s, a)).fold(0, |m, a| m | (1 << a))
    }

    pub fn admissible(&self, s: u32) -> bool {
        self.conflict_free(s) && (0..self.n).all(|a| s & (1 << a) == 0 || self.defends(s, a))
    }

    pub fn complete(&self, s: u32) -> bool {
        self.admissible(s) && self.characteristic(s) == s
    }

    fn all_sets(&self) -> impl Iterator<Item = u32> {
        0..(1u32 << self.n)
    }

    /// Least fixed point of the characteristic function, iterated from the empty set.
    pub fn grounded_lfp(&self) -> u32 {
        let mut s = 0;
        loop {
            let next = self.characteristic(s);
            if next == s {
                return s;
            }
            s = next;
        }
    }

    /// Intersection of all complete extensions.
    pub fn grounded_by_complete(&self) -> u32 {
        self.all_sets()
            .filter(|&s| self.complete(s))
            .fold(self.full(), |acc, s| acc & s)
    }

    pub fn full(&self) -> u32 {
        if self.n == 0 {
            0
        } else {
            (1u32 << self.n) - 1
        }
    }

    /// Admissible sets with no admissible strict superset.
    pub fn preferred(&self) -> BTreeSet<u32> {
        let admissible: Vec<u32> = self.all_sets().filter(|&s| self.admissible(s)).collect();
        admissible
            .iter()
            .copied()
            .filter(|&s| !admissible.iter().any(|&t| t != s && t & s == s))
            .collect()
    }

    pub fn to_mask(&self, ext: &Extension) -> u32 {
        ext.iter().fold(0, |m, id| {
            let i: usize = id.as_str()[1..].parse().expect("generated name");
            m | (1 << i)
        })
    }
}

const NAMESPACES: [(&str, &str); 3] = [
    ("ex", "http://example.org/ex#"),
    ("voc", "http://example.org/vocab/"),
    ("t", "urn:test:"),
];

pub fn random_prefixes(rng: &mut impl Rng) -> PrefixMap {
    let mut map = PrefixMap::with_standard();
    for (p, ns) in NAMESPACES {
        if rng.random_bool(0.7) {
            map.insert(p, ns).unwrap();
        }
    }
    map
}

fn random_local(rng: &mut impl Rng) -> String {
    const HEAD: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789";
    const TAIL: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789-";
    let len = rng.random_range(1..8);
    (0..len)
        .map(|i| {
            let pool = if i == 0 { HEAD } else { TAIL };
            pool[rng.random_range(0..pool.len())] as char
        })
        .collect()
}

pub fn random_iri(rng: &mut impl Rng) -> Iri {
    let (_, ns) = NAMESPACES[rng.random_range(0..NAMESPACES.len())];
    let local = if rng.random_bool(0.1) {
        // Not expressible as a prefixed name.
        format!("{}.{}", random_local(rng), random_local(rng))
    } else {
        random_local(rng)
    };
    Iri::new(format!("{ns}{local}")).unwrap()
}

fn random_text(rng: &mut impl Rng) -> String {
    const POOL: &[char] = &[
        'a', 'b', 'z', 'Q', ' ', '"', '\\', '\n', '\t', '\r', 'é', '€', '7', '.', ';', ',', '#', '<', '>', '@', '^',
    ];
    let len = rng.random_range(0..12);
    (0..len).map(|_| POOL[rng.random_range(0..POOL.len())]).collect()
}

pub fn random_literal(rng: &mut impl Rng) -> Literal {
    match rng.random_range(0..6) {
        0 => Literal::string(random_text(rng)),
        1 => Literal::lang(random_text(rng), ["en", "de", "en-GB", "pt-BR"][rng.random_range(0..4)]).unwrap(),
        2 => Literal::integer(rng.random_range(-1000..1000)),
        3 => {
            let whole: i32 = rng.random_range(-500..500);
            let frac: u32 = rng.random_range(0..100);
            Literal::typed(
                format!("{whole}.{frac}"),
                Iri::new("http://www.w3.org/2001/XMLSchema#decimal").unwrap(),
            )
            .unwrap()
        }
        4 => Literal::typed(
            ["true", "false"][rng.random_range(0..2)],
            Iri::new("http://www.w3.org/2001/XMLSchema#boolean").unwrap(),
        )
        .unwrap(),
        _ => Literal::typed(random_text(rng), random_iri(rng)).unwrap(),
    }
}

pub fn random_triples(rng: &mut impl Rng, max: usize) -> BTreeSet<Triple> {
    let subjects: Vec<Iri> = (0..rng.random_range(1..6)).map(|_| random_iri(rng)).collect();
    let predicates: Vec<Iri> = (0..rng.random_range(1..5)).map(|_| random_iri(rng)).collect();
    let count = rng.random_range(0..=max);
    let mut out = BTreeSet::new();
    for _ in 0..count {
        let s = subjects[rng.random_range(0..subjects.len())].clone();
        let p = if rng.random_bool(0.15) {
            Iri::new("http://www.w3.org/1999/02/22-rdf-syntax-ns#type").unwrap()
        } else {
            predicates[rng.random_range(0..predicates.len())].clone()
        };
        let o: RdfTerm = if rng.random_bool(0.4) {
            RdfTerm::Iri(random_iri(rng))
        } else {
            RdfTerm::Literal(random_literal(rng))
        };
        out.insert(Triple::new(s, p, o));
    }
    out
}
