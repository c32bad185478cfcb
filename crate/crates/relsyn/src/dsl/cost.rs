//! Additive cost model over program nodes.

use std::collections::HashMap;
use std::path::Path;

use crate::dsl::ast::{Node, ProgramAst};
use crate::dsl::grammar::{Production, Rhs};

/// Per-constructor costs. Parameters and constants have their own entries;
/// chain productions are free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostModel {
    pub ops: HashMap<String, u64>,
    pub default: u64,
    pub param: u64,
    pub constant: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            ops: HashMap::new(),
            default: 1,
            param: 1,
            constant: 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CostModelError {
    #[error("line {line}: expected `name = cost`")]
    Syntax { line: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CostModel {
    pub fn op_cost(&self, name: &str) -> u64 {
        self.ops.get(name).copied().unwrap_or(self.default)
    }

    pub fn node_cost(&self, node: &Node) -> u64 {
        match node {
            Node::Param { .. } => self.param,
            Node::Const(_) => self.constant,
            Node::Op(op) => self.op_cost(op.name),
        }
    }

    pub fn production_cost(&self, p: &Production) -> u64 {
        match &p.rhs {
            Rhs::Const(_) => self.constant,
            Rhs::Op { op, .. } => self.op_cost(op.name),
            Rhs::Chain(_) => 0,
        }
    }

    /// Sum of node costs.
    pub fn cost(&self, p: &ProgramAst) -> u64 {
        self.node_cost(&p.node) + p.children.iter().map(|c| self.cost(c)).sum::<u64>()
    }

    /// Reads `name = cost` lines; `@default`, `@param` and `@const` set the
    /// fallback, parameter and constant costs.
    pub fn parse(text: &str) -> Result<CostModel, CostModelError> {
        let mut m = CostModel::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, cost) = line
                .split_once('=')
                .ok_or(CostModelError::Syntax { line: i + 1 })?;
            let cost: u64 = cost
                .trim()
                .parse()
                .map_err(|_| CostModelError::Syntax { line: i + 1 })?;
            match name.trim() {
                "@default" => m.default = cost,
                "@param" => m.param = cost,
                "@const" => m.constant = cost,
                n if !n.is_empty() => {
                    m.ops.insert(n.to_string(), cost);
                }
                _ => return Err(CostModelError::Syntax { line: i + 1 }),
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<CostModel, CostModelError> {
        let text = std::fs::read_to_string(path).map_err(|source| CostModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        CostModel::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::ast::parse_program;
    use crate::dsl::grammar::Grammar;

    #[test]
    fn unit_costs() {
        let g = Grammar::parse("t", "params x1, x2\nstart e\ne -> x1 | x2 | plus(e, e)").unwrap();
        let m = CostModel::default();
        assert_eq!(m.cost(&parse_program("x1", &g).unwrap()), 1);
        assert_eq!(m.cost(&parse_program("plus(x1,x2)", &g).unwrap()), 3);
    }

    #[test]
    fn parse_file() {
        let m = CostModel::parse("# weights\nplus = 3\n@param = 0\n@default=2\n").unwrap();
        assert_eq!(m.op_cost("plus"), 3);
        assert_eq!(m.op_cost("times"), 2);
        assert_eq!(m.param, 0);
        assert!(CostModel::parse("plus 3").is_err());
    }
}
