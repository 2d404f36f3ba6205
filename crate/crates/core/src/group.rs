//! Exact finite groups given by Cayley tables, and direct products of them.
//!
//! Elements are dense indices `0..order`. Every table is validated at
//! construction: identity, inverses, and associativity are checked
//! exhaustively (orders are desk scale, capped at [`MAX_ORDER`]).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Construction refuses tables above this order; associativity is O(n^3).
pub const MAX_ORDER: usize = 512;

/// A tuple of per-factor element indices; the element type of [`ProductGroup`].
pub type Tuple = Vec<usize>;

#[derive(Clone, Eq)]
pub struct FiniteGroup {
    label: String,
    order: usize,
    /// Flattened `order x order` table, row-major: `table[a*order+b] = a·b`.
    table: Vec<usize>,
    inverse: Vec<usize>,
    identity: usize,
}

impl PartialEq for FiniteGroup {
    /// Labels are descriptive only; equality is table equality.
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.table == other.table
    }
}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteGroup({}, order {})", self.label, self.order)
    }
}

impl FiniteGroup {
    /// Validate a square table and compute identity and inverses.
    pub fn from_table(label: impl Into<String>, table: Vec<Vec<usize>>) -> Result<FiniteGroup> {
        let label = label.into();
        let order = table.len();
        if order == 0 {
            return Err(Error::NotAGroup("empty table".into()));
        }
        if order > MAX_ORDER {
            return Err(Error::NotAGroup(format!(
                "order {order} exceeds cap {MAX_ORDER}"
            )));
        }
        let mut flat = Vec::with_capacity(order * order);
        for row in &table {
            if row.len() != order {
                return Err(Error::NotAGroup("table is not square".into()));
            }
            for &v in row {
                if v >= order {
                    return Err(Error::NotAGroup(format!("entry {v} out of range")));
                }
                flat.push(v);
            }
        }
        // Identity: the unique e with e·x = x·e = x for all x.
        let identity = (0..order)
            .find(|&e| (0..order).all(|x| flat[e * order + x] == x && flat[x * order + e] == x))
            .ok_or_else(|| Error::NotAGroup("no identity element".into()))?;
        let mut inverse = vec![usize::MAX; order];
        for x in 0..order {
            match (0..order)
                .find(|&y| flat[x * order + y] == identity && flat[y * order + x] == identity)
            {
                Some(y) => inverse[x] = y,
                None => return Err(Error::NotAGroup(format!("no inverse for {x}"))),
            }
        }
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    let ab_c = flat[flat[a * order + b] * order + c];
                    let a_bc = flat[a * order + flat[b * order + c]];
                    if ab_c != a_bc {
                        return Err(Error::NotAGroup(format!(
                            "associativity fails at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        Ok(FiniteGroup {
            label,
            order,
            table: flat,
            inverse,
            identity,
        })
    }

    /// Cyclic group of order `n` (addition mod n), labeled `Zn`.
    pub fn cyclic(n: usize) -> FiniteGroup {
        assert!(n >= 1 && n <= MAX_ORDER);
        let table = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        FiniteGroup::from_table(format!("Z{n}"), table).expect("cyclic table is a group")
    }

    /// Klein four-group, labeled `V4`. Elements are bit pairs 0..4, XOR.
    pub fn klein4() -> FiniteGroup {
        let table = (0..4).map(|a| (0..4).map(|b| a ^ b).collect()).collect();
        FiniteGroup::from_table("V4", table).expect("klein table is a group")
    }

    /// Symmetric group on three points, labeled `S3`. Elements are the
    /// permutations of {0,1,2} in lexicographic order; the product `a·b`
    /// applies `a` first, then `b`.
    pub fn symmetric3() -> FiniteGroup {
        let perms: Vec<[usize; 3]> = vec![
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let index_of = |p: &[usize; 3]| perms.iter().position(|q| q == p).unwrap();
        let table = perms
            .iter()
            .map(|a| {
                perms
                    .iter()
                    .map(|b| {
                        let composed = [b[a[0]], b[a[1]], b[a[2]]];
                        index_of(&composed)
                    })
                    .collect()
            })
            .collect();
        FiniteGroup::from_table("S3", table).expect("s3 table is a group")
    }

    /// Parse a preset shorthand: `cyclic:n`, `klein4`, or `symmetric:3`.
    pub fn from_shorthand(spec: &str) -> Result<FiniteGroup> {
        if let Some(n) = spec.strip_prefix("cyclic:") {
            let n: usize = n
                .parse()
                .map_err(|_| Error::Parse(format!("bad cyclic order in {spec:?}")))?;
            if n == 0 || n > MAX_ORDER {
                return Err(Error::Parse(format!("cyclic order {n} out of range")));
            }
            return Ok(FiniteGroup::cyclic(n));
        }
        match spec {
            "klein4" => Ok(FiniteGroup::klein4()),
            "symmetric:3" => Ok(FiniteGroup::symmetric3()),
            _ => Err(Error::Parse(format!("unknown group shorthand {spec:?}"))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn op(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn is_commutative(&self) -> bool {
        (0..self.order).all(|a| (a..self.order).all(|b| self.op(a, b) == self.op(b, a)))
    }

    pub fn table_rows(&self) -> Vec<Vec<usize>> {
        (0..self.order)
            .map(|a| self.table[a * self.order..(a + 1) * self.order].to_vec())
            .collect()
    }
}

/// Direct product of finite groups, with tuples as elements and the
/// componentwise operation. A single group is the one-factor product.
#[derive(Clone, Eq)]
pub struct ProductGroup {
    factors: Vec<Arc<FiniteGroup>>,
}

impl PartialEq for ProductGroup {
    fn eq(&self, other: &Self) -> bool {
        self.factors.len() == other.factors.len()
            && self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| a.as_ref() == b.as_ref())
    }
}

impl fmt::Debug for ProductGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProductGroup({})", self.label())
    }
}

impl ProductGroup {
    /// The empty product is the trivial group on the empty tuple.
    pub fn new(factors: Vec<Arc<FiniteGroup>>) -> ProductGroup {
        ProductGroup { factors }
    }

    pub fn single(group: Arc<FiniteGroup>) -> ProductGroup {
        ProductGroup::new(vec![group])
    }

    pub fn label(&self) -> String {
        self.factors
            .iter()
            .map(|g| g.label().to_string())
            .collect::<Vec<_>>()
            .join("x")
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, i: usize) -> &Arc<FiniteGroup> {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[Arc<FiniteGroup>] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.iter().map(|g| g.order()).product()
    }

    pub fn identity(&self) -> Tuple {
        self.factors.iter().map(|g| g.identity()).collect()
    }

    pub fn contains(&self, t: &[usize]) -> bool {
        t.len() == self.factors.len() && t.iter().zip(&self.factors).all(|(&v, g)| v < g.order())
    }

    pub fn op(&self, a: &[usize], b: &[usize]) -> Tuple {
        debug_assert_eq!(a.len(), self.factors.len());
        debug_assert_eq!(b.len(), self.factors.len());
        self.factors
            .iter()
            .enumerate()
            .map(|(i, g)| g.op(a[i], b[i]))
            .collect()
    }

    pub fn inv(&self, a: &[usize]) -> Tuple {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, g)| g.inv(a[i]))
            .collect()
    }

    /// All elements in lexicographic tuple order.
    pub fn elements(&self) -> impl Iterator<Item = Tuple> + '_ {
        let radices: Vec<usize> = self.factors.iter().map(|g| g.order()).collect();
        let total = self.order();
        (0..total).map(move |mut ix| {
            let mut t = vec![0; radices.len()];
            for pos in (0..radices.len()).rev() {
                t[pos] = ix % radices[pos];
                ix /= radices[pos];
            }
            t
        })
    }

    pub fn is_commutative(&self) -> bool {
        self.factors.iter().all(|g| g.is_commutative())
    }
}

/// JSON form of a group: either a preset shorthand string or a full table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Shorthand(String),
    Table {
        label: String,
        table: Vec<Vec<usize>>,
    },
}

impl GroupSpec {
    pub fn build(&self) -> Result<FiniteGroup> {
        match self {
            GroupSpec::Shorthand(s) => FiniteGroup::from_shorthand(s),
            GroupSpec::Table { label, table } => {
                FiniteGroup::from_table(label.clone(), table.clone())
            }
        }
    }

    pub fn from_group(g: &FiniteGroup) -> GroupSpec {
        GroupSpec::Table {
            label: g.label().to_string(),
            table: g.table_rows(),
        }
    }
}
