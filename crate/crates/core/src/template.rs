//! Coset templates: named carrier groups plus named coset relations over
//! products of carriers.
//!
//! The full relation set of a coset template is closed under right
//! translation, which is exponential if stored literally. The template
//! therefore stores base relations and materializes translates on demand,
//! caching each under a canonical name keyed by the coset's member set; a
//! translate whose member set already names a relation reuses that name.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::coset::CosetSet;
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, GroupSpec, ProductGroup, Tuple};

/// A named template relation: a coset over the product of the signature's
/// carriers.
#[derive(Debug, Clone)]
pub struct Relation {
    /// Carrier indices, one per coordinate.
    pub signature: Vec<usize>,
    pub coset: CosetSet,
}

impl Relation {
    pub fn arity(&self) -> usize {
        self.signature.len()
    }
}

#[derive(Debug, Default)]
struct Store {
    relations: BTreeMap<String, Arc<Relation>>,
    /// (signature, members) -> relation name; backs translate dedup.
    by_members: BTreeMap<(Vec<usize>, Vec<Tuple>), String>,
}

#[derive(Debug)]
pub struct CosetTemplate {
    carriers: Vec<Arc<FiniteGroup>>,
    carrier_index: BTreeMap<String, usize>,
    store: RwLock<Store>,
}

impl Clone for CosetTemplate {
    fn clone(&self) -> Self {
        let store = self.store.read().unwrap();
        CosetTemplate {
            carriers: self.carriers.clone(),
            carrier_index: self.carrier_index.clone(),
            store: RwLock::new(Store {
                relations: store.relations.clone(),
                by_members: store.by_members.clone(),
            }),
        }
    }
}

impl CosetTemplate {
    pub fn new(carriers: Vec<FiniteGroup>) -> Result<CosetTemplate> {
        let carriers: Vec<Arc<FiniteGroup>> = carriers.into_iter().map(Arc::new).collect();
        let mut carrier_index = BTreeMap::new();
        for (i, g) in carriers.iter().enumerate() {
            if carrier_index.insert(g.label().to_string(), i).is_some() {
                return Err(Error::InvalidSpec(format!(
                    "duplicate carrier label {:?}",
                    g.label()
                )));
            }
        }
        Ok(CosetTemplate {
            carriers,
            carrier_index,
            store: RwLock::new(Store::default()),
        })
    }

    pub fn carriers(&self) -> &[Arc<FiniteGroup>] {
        &self.carriers
    }

    pub fn carrier(&self, index: usize) -> &Arc<FiniteGroup> {
        &self.carriers[index]
    }

    pub fn carrier_named(&self, label: &str) -> Result<usize> {
        self.carrier_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownCarrier(label.to_string()))
    }

    /// Product of the carriers in `signature` (carrier indices).
    pub fn signature_product(&self, signature: &[usize]) -> ProductGroup {
        ProductGroup::new(
            signature
                .iter()
                .map(|&i| self.carriers[i].clone())
                .collect(),
        )
    }

    /// Add a base relation from raw tuples. The tuples are classified; any
    /// set is accepted so that validation can report non-coset relations.
    pub fn add_relation(
        &mut self,
        name: impl Into<String>,
        signature_labels: &[&str],
        tuples: Vec<Tuple>,
    ) -> Result<()> {
        let signature: Vec<usize> = signature_labels
            .iter()
            .map(|l| self.carrier_named(l))
            .collect::<Result<_>>()?;
        let coset = CosetSet::classify(self.signature_product(&signature), tuples)?;
        self.insert_relation(name.into(), Relation { signature, coset })
    }

    fn insert_relation(&mut self, name: String, relation: Relation) -> Result<()> {
        let store = self.store.get_mut().unwrap();
        if store.relations.contains_key(&name) {
            return Err(Error::InvalidSpec(format!("duplicate relation {name:?}")));
        }
        let key = (
            relation.signature.clone(),
            relation.coset.members().to_vec(),
        );
        store.by_members.entry(key).or_insert_with(|| name.clone());
        store.relations.insert(name, Arc::new(relation));
        Ok(())
    }

    pub fn relation(&self, name: &str) -> Result<Arc<Relation>> {
        self.store
            .read()
            .unwrap()
            .relations
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn relation_names(&self) -> Vec<String> {
        self.store
            .read()
            .unwrap()
            .relations
            .keys()
            .cloned()
            .collect()
    }

    pub fn relations_snapshot(&self) -> Vec<(String, Arc<Relation>)> {
        self.store
            .read()
            .unwrap()
            .relations
            .iter()
            .map(|(n, r)| (n.clone(), r.clone()))
            .collect()
    }

    /// Name of the singleton identity relation required for every carrier.
    pub fn identity_relation_name(&self, carrier: usize) -> String {
        format!("1@{}", self.carriers[carrier].label())
    }

    /// Materialize the right translate of relation `base` by `shift` and
    /// return its name. An existing relation with the same member set is
    /// reused, so translating back and forth cannot grow the template.
    pub fn translated_relation(&self, base: &str, shift: &[usize]) -> Result<String> {
        let rel = self.relation(base)?;
        if shift.len() != rel.arity() {
            return Err(Error::ArityMismatch {
                context: format!("translate {base}"),
                expected: rel.arity(),
                got: shift.len(),
            });
        }
        let translated = rel.coset.translate(shift)?;
        self.intern_coset(base, rel.signature.clone(), translated)
    }

    /// Register a coset as a template relation under a canonical derived
    /// name (dedup by member set), returning the name.
    pub fn intern_coset(
        &self,
        base_hint: &str,
        signature: Vec<usize>,
        coset: CosetSet,
    ) -> Result<String> {
        if !coset.is_coset_or_subgroup() {
            return Err(Error::NotCosetInput);
        }
        if coset.ambient() != &self.signature_product(&signature) {
            return Err(Error::InvalidSpec(
                "coset ambient does not match signature".into(),
            ));
        }
        let key = (signature.clone(), coset.members().to_vec());
        if let Some(name) = self.store.read().unwrap().by_members.get(&key) {
            return Ok(name.clone());
        }
        let mut store = self.store.write().unwrap();
        if let Some(name) = store.by_members.get(&key) {
            return Ok(name.clone());
        }
        let rep: Vec<String> = coset
            .representative()
            .iter()
            .map(|v| v.to_string())
            .collect();
        let mut name = format!("{}*{}", base_hint, rep.join("."));
        while store.relations.contains_key(&name) {
            name.push('\'');
        }
        store.by_members.insert(key, name.clone());
        store
            .relations
            .insert(name.clone(), Arc::new(Relation { signature, coset }));
        Ok(name)
    }

    /// Check the template conditions: every relation is a coset or subgroup
    /// over the product of its signature carriers, and every carrier has its
    /// identity singleton relation `1@<label>`.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let snapshot = self.relations_snapshot();
        for (name, rel) in &snapshot {
            if !rel.coset.is_coset_or_subgroup() {
                violations.push(format!("relation {name:?} is not a coset"));
            }
            if rel.signature.iter().any(|&c| c >= self.carriers.len()) {
                violations.push(format!("relation {name:?} references an unknown carrier"));
            }
        }
        for (i, g) in self.carriers.iter().enumerate() {
            let name = self.identity_relation_name(i);
            match snapshot.iter().find(|(n, _)| *n == name) {
                None => violations.push(format!(
                    "carrier {:?} is missing its identity singleton {name:?}",
                    g.label()
                )),
                Some((_, rel)) => {
                    let expected = vec![vec![g.identity()]];
                    if rel.signature != vec![i] || rel.coset.members() != expected.as_slice() {
                        violations.push(format!(
                            "relation {name:?} is not the identity singleton of {:?}",
                            g.label()
                        ));
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(TemplateJson::from_template(self)).expect("template serializes")
    }

    pub fn from_json_str(s: &str) -> Result<CosetTemplate> {
        let json: TemplateJson = serde_json::from_str(s)?;
        json.build()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationJson {
    pub signature: Vec<String>,
    pub tuples: Vec<Tuple>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateJson {
    pub carriers: Vec<GroupSpec>,
    pub relations: BTreeMap<String, RelationJson>,
}

impl TemplateJson {
    pub fn from_template(t: &CosetTemplate) -> TemplateJson {
        let carriers = t
            .carriers
            .iter()
            .map(|g| GroupSpec::from_group(g))
            .collect();
        let relations = t
            .relations_snapshot()
            .into_iter()
            .map(|(name, rel)| {
                let signature = rel
                    .signature
                    .iter()
                    .map(|&i| t.carriers[i].label().to_string())
                    .collect();
                (
                    name,
                    RelationJson {
                        signature,
                        tuples: rel.coset.members().to_vec(),
                    },
                )
            })
            .collect();
        TemplateJson {
            carriers,
            relations,
        }
    }

    pub fn build(&self) -> Result<CosetTemplate> {
        let carriers: Vec<FiniteGroup> = self
            .carriers
            .iter()
            .map(|spec| spec.build())
            .collect::<Result<_>>()?;
        let mut template = CosetTemplate::new(carriers)?;
        for (name, rel) in &self.relations {
            let labels: Vec<&str> = rel.signature.iter().map(|s| s.as_str()).collect();
            template.add_relation(name.clone(), &labels, rel.tuples.clone())?;
        }
        Ok(template)
    }
}
