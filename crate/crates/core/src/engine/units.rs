//! How a program is cut into analysis units.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::analyzer::AnalysisUnit;
use crate::ir::{sym, PredId, Program, Sym};

/// Modular: one unit per clique group of mutually importing modules.
/// Monolithic: the whole program as one unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layout {
    Modular,
    Monolithic,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Modular => "modular",
            Layout::Monolithic => "monolithic",
        })
    }
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "modular" => Ok(Layout::Modular),
            "monolithic" => Ok(Layout::Monolithic),
            other => Err(format!("unknown layout `{other}`")),
        }
    }
}

/// Name of the single unit of a monolithic layout.
pub const WHOLE_PROGRAM: &str = "*program*";

/// Analysis units with a fixed scheduling order, importers first.
#[derive(Clone, Debug)]
pub struct UnitProgram {
    pub units: BTreeMap<Sym, AnalysisUnit>,
    pub order: Vec<Sym>,
    unit_of_pred: BTreeMap<PredId, Sym>,
    unit_of_module: BTreeMap<Sym, Sym>,
}

impl UnitProgram {
    pub fn new(program: &Program, layout: Layout) -> UnitProgram {
        let groups: Vec<Vec<Sym>> = match layout {
            Layout::Modular => program.clique_groups.clone(),
            Layout::Monolithic => vec![program.modules.keys().cloned().collect()],
        };
        let mut units = Vec::new();
        for g in &groups {
            let name = match layout {
                Layout::Monolithic => sym(WHOLE_PROGRAM),
                Layout::Modular => sym(&g.iter().map(|s| &**s).collect::<Vec<_>>().join("+")),
            };
            let members: BTreeSet<Sym> = g.iter().cloned().collect();
            let mut u = AnalysisUnit::from_modules(program, &name, &members);
            u.name = name;
            units.push(u);
        }
        let unit_of_module: BTreeMap<Sym, Sym> =
            units.iter().flat_map(|u| u.members.iter().map(move |m| (m.clone(), u.name.clone()))).collect();
        for u in &mut units {
            u.imports = u.imports.iter().map(|m| unit_of_module[m].clone()).collect();
        }
        let order = units.iter().map(|u| u.name.clone()).collect();
        UnitProgram::from_units(units, order, unit_of_module)
    }

    pub fn from_units(units: Vec<AnalysisUnit>, order: Vec<Sym>, unit_of_module: BTreeMap<Sym, Sym>) -> UnitProgram {
        let unit_of_pred =
            units.iter().flat_map(|u| u.local.iter().map(move |p| (p.clone(), u.name.clone()))).collect();
        UnitProgram { units: units.into_iter().map(|u| (u.name.clone(), u)).collect(), order, unit_of_pred, unit_of_module }
    }

    /// The unit owning `p`, if it belongs to this program.
    pub fn unit_of(&self, p: &PredId) -> Option<&Sym> {
        self.unit_of_pred.get(p).or_else(|| self.unit_of_module.get(&p.module))
    }

    pub fn unit_of_module(&self, m: &Sym) -> Option<&Sym> {
        self.unit_of_module.get(m)
    }

    pub fn get(&self, name: &Sym) -> &AnalysisUnit {
        &self.units[name]
    }

    pub fn is_exported(&self, p: &PredId) -> bool {
        self.unit_of(p).is_some_and(|u| self.units[u].exports.contains(p))
    }

    pub fn rank(&self, name: &Sym) -> usize {
        self.order.iter().position(|n| n == name).unwrap_or(usize::MAX)
    }
}
