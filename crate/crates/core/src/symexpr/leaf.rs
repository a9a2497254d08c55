use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::{Expr, ExprError};

/// Numeric evaluator of a non-smooth leaf, given its evaluated arguments.
pub type LeafFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Named function that can be evaluated but not differentiated.
///
/// Identity (equality, ordering, hashing) is by name and arguments; the
/// evaluator is carried along but not compared.
#[derive(Clone)]
pub struct Leaf {
    name: Arc<str>,
    args: Vec<Expr>,
    eval: Option<LeafFn>,
}

impl Leaf {
    pub fn new(name: &str, args: Vec<Expr>, eval: LeafFn) -> Leaf {
        Leaf {
            name: name.into(),
            args,
            eval: Some(eval),
        }
    }

    /// A leaf with no evaluator; evaluating it fails with `UnboundLeaf`.
    pub fn unbound(name: &str, args: Vec<Expr>) -> Leaf {
        Leaf {
            name: name.into(),
            args,
            eval: None,
        }
    }

    /// Looks up one of the built-in non-smooth functions by name.
    pub fn builtin(name: &str, args: Vec<Expr>) -> Option<Leaf> {
        let f: LeafFn = match (name, args.len()) {
            ("absRe" | "abs", 1) => Arc::new(|a: &[f64]| a[0].abs()),
            ("sign", 1) => Arc::new(|a: &[f64]| {
                if a[0] > 0.0 {
                    1.0
                } else if a[0] < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }),
            ("pos", 1) => Arc::new(|a: &[f64]| a[0].max(0.0)),
            _ => return None,
        };
        Some(Leaf::new(name, args, f))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn args(&self) -> &[Expr] {
        &self.args
    }

    pub fn is_bound(&self) -> bool {
        self.eval.is_some()
    }

    pub fn with_eval(&self, eval: LeafFn) -> Leaf {
        Leaf {
            name: self.name.clone(),
            args: self.args.clone(),
            eval: Some(eval),
        }
    }

    pub(crate) fn evaluator(&self) -> Option<&LeafFn> {
        self.eval.as_ref()
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        let f = self
            .eval
            .as_ref()
            .ok_or_else(|| ExprError::UnboundLeaf(self.name.to_string()))?;
        let vals = self
            .args
            .iter()
            .map(|a| a.eval(point))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(f(&vals))
    }

    pub(crate) fn substitute(&self, subs: &[Expr]) -> Result<Leaf, ExprError> {
        Ok(Leaf {
            name: self.name.clone(),
            args: self
                .args
                .iter()
                .map(|a| a.substitute(subs))
                .collect::<Result<_, _>>()?,
            eval: self.eval.clone(),
        })
    }

    pub(crate) fn map_args(&self, f: impl Fn(&Expr) -> Expr) -> Leaf {
        Leaf {
            name: self.name.clone(),
            args: self.args.iter().map(f).collect(),
            eval: self.eval.clone(),
        }
    }
}

impl PartialEq for Leaf {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.args == other.args
    }
}

impl Eq for Leaf {}

impl PartialOrd for Leaf {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Leaf {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name
            .cmp(&other.name)
            .then_with(|| self.args.cmp(&other.args))
    }
}

impl Hash for Leaf {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        self.args.hash(state);
    }
}

impl fmt::Debug for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({:?})", self.name, self.args)
    }
}
