//! Relaxation: every occurrence of a target function gets its own symbol.

use std::collections::{BTreeMap, BTreeSet};

use crate::lang::formula::{Formula, Symbol, Term};

/// Original symbol to occurrence symbols, with the inverse map.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OccurrenceMap {
    forward: BTreeMap<Symbol, BTreeSet<Symbol>>,
    inverse: BTreeMap<Symbol, Symbol>,
}

impl OccurrenceMap {
    pub fn new() -> OccurrenceMap {
        OccurrenceMap::default()
    }

    pub fn singleton(f: Symbol, occ: Symbol) -> OccurrenceMap {
        let mut m = OccurrenceMap::new();
        m.insert(f, occ);
        m
    }

    pub fn insert(&mut self, f: Symbol, occ: Symbol) {
        assert!(
            self.inverse.get(&occ).is_none_or(|g| *g == f),
            "occurrence {occ} already belongs to another symbol"
        );
        self.forward
            .entry(f.clone())
            .or_default()
            .insert(occ.clone());
        self.inverse.insert(occ, f);
    }

    /// The union operator on occurrence maps: symbols present in both maps
    /// get the union of their occurrence sets, others keep their own set.
    pub fn union(&self, other: &OccurrenceMap) -> OccurrenceMap {
        let mut out = self.clone();
        for (f, occs) in &other.forward {
            for o in occs {
                out.insert(f.clone(), o.clone());
            }
        }
        out
    }

    pub fn occurrences(&self, f: &Symbol) -> impl Iterator<Item = &Symbol> {
        self.forward.get(f).into_iter().flatten()
    }

    pub fn occurrence_count(&self, f: &Symbol) -> usize {
        self.forward.get(f).map_or(0, BTreeSet::len)
    }

    pub fn original(&self, occ: &Symbol) -> Option<&Symbol> {
        self.inverse.get(occ)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.forward.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn get(&self, f: &Symbol) -> Option<&BTreeSet<Symbol>> {
        self.forward.get(f)
    }
}

/// Renames the k-th occurrence (pre-order, left to right) of each target `f`
/// to `f#k`. Constants and interpreted functions are left alone.
pub fn relax(phi: &Formula, targets: &BTreeSet<Symbol>) -> (Formula, OccurrenceMap) {
    let mut counters: BTreeMap<Symbol, usize> = BTreeMap::new();
    let mut m = OccurrenceMap::new();
    let out = relax_formula(phi, targets, &mut counters, &mut m);
    (out, m)
}

fn relax_formula(
    phi: &Formula,
    targets: &BTreeSet<Symbol>,
    counters: &mut BTreeMap<Symbol, usize>,
    m: &mut OccurrenceMap,
) -> Formula {
    match phi {
        Formula::Atom(l, r, t) => {
            let l = relax_term(l, targets, counters, m);
            let t = relax_term(t, targets, counters, m);
            Formula::Atom(l, *r, t)
        }
        Formula::Binary(l, c, r) => {
            let l = relax_formula(l, targets, counters, m);
            let r = relax_formula(r, targets, counters, m);
            Formula::Binary(Box::new(l), *c, Box::new(r))
        }
        Formula::Not(b) => Formula::Not(Box::new(relax_formula(b, targets, counters, m))),
    }
}

fn relax_term(
    t: &Term,
    targets: &BTreeSet<Symbol>,
    counters: &mut BTreeMap<Symbol, usize>,
    m: &mut OccurrenceMap,
) -> Term {
    match t {
        Term::Apply(f, args) => {
            let name = if targets.contains(f) {
                let k = counters.entry(f.clone()).or_insert(0);
                *k += 1;
                let occ = Symbol::occurrence(f, *k);
                m.insert(f.clone(), occ.clone());
                occ
            } else {
                f.clone()
            };
            Term::Apply(
                name,
                args.iter()
                    .map(|a| relax_term(a, targets, counters, m))
                    .collect(),
            )
        }
        _ => t.clone(),
    }
}
