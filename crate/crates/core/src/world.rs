//! Symbolic object worlds and the closed question space over them.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, stream};

pub const WORLD_FORMAT_VERSION: u32 = 1;

const NAMED_ATTRIBUTES: [(&str, [&str; 6]); 6] = [
    ("color", ["red", "blue", "green", "yellow", "purple", "white"]),
    ("shape", ["circle", "square", "triangle", "star", "hexagon", "cross"]),
    ("size", ["tiny", "small", "medium", "large", "huge", "giant"]),
    ("location", ["left", "right", "top", "bottom", "center", "corner"]),
    ("material", ["wood", "metal", "glass", "cloth", "stone", "paper"]),
    ("texture", ["smooth", "rough", "striped", "dotted", "shiny", "matte"]),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<String>,
    /// Optional attributes may take the UNDEFINED value in generated worlds.
    #[serde(default)]
    pub optional: bool,
}

impl Attribute {
    pub fn new(name: impl Into<String>, values: &[&str]) -> Self {
        Attribute { name: name.into(), values: values.iter().map(|v| v.to_string()).collect(), optional: false }
    }

    pub fn optional(mut self) -> Self {
        self.optional = true;
        self
    }
}

/// Ordered attribute list. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Attribute>", into = "Vec<Attribute>")]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
}

impl TryFrom<Vec<Attribute>> for AttributeSchema {
    type Error = Error;

    fn try_from(attributes: Vec<Attribute>) -> Result<Self> {
        AttributeSchema::new(attributes)
    }
}

impl From<AttributeSchema> for Vec<Attribute> {
    fn from(schema: AttributeSchema) -> Self {
        schema.attributes
    }
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut names = HashSet::new();
        for attr in &attributes {
            if attr.name.is_empty() {
                return Err(Error::Validation("attribute name must be non-empty".into()));
            }
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Validation(format!("duplicate attribute {:?}", attr.name)));
            }
            if attr.values.len() < 2 {
                return Err(Error::Validation(format!("attribute {:?} needs at least 2 values", attr.name)));
            }
            let mut seen = HashSet::new();
            for v in &attr.values {
                if !seen.insert(v.as_str()) {
                    return Err(Error::Validation(format!("duplicate value {:?} in attribute {:?}", v, attr.name)));
                }
            }
        }
        Ok(AttributeSchema { attributes })
    }

    /// `n_attributes` attributes with `n_values` values each. The first six
    /// attributes and values get readable names, the rest are numbered.
    pub fn uniform(n_attributes: usize, n_values: usize) -> Result<Self> {
        let attrs = (0..n_attributes)
            .map(|i| {
                let (name, named_values) = match NAMED_ATTRIBUTES.get(i) {
                    Some((n, vs)) => (n.to_string(), Some(vs)),
                    None => (format!("attr{i}"), None),
                };
                let values = (0..n_values)
                    .map(|j| match named_values.and_then(|vs| vs.get(j)) {
                        Some(v) => v.to_string(),
                        None => format!("v{j}"),
                    })
                    .collect();
                Attribute { name, values, optional: false }
            })
            .collect();
        AttributeSchema::new(attrs)
    }

    /// The default experiment schema: 4 attributes with 4 values each.
    pub fn default_experiment() -> Self {
        AttributeSchema::uniform(4, 4).expect("default schema is valid")
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn question(&self, attribute: &str, value: &str) -> Result<Question> {
        let a = self
            .attribute_index(attribute)
            .ok_or_else(|| Error::Validation(format!("unknown attribute {attribute:?}")))?;
        let v = self.attributes[a]
            .values
            .iter()
            .position(|x| x == value)
            .ok_or_else(|| Error::Validation(format!("unknown value {value:?} for attribute {attribute:?}")))?;
        Ok(Question { attribute: a, value: v })
    }

    pub fn contains(&self, q: Question) -> bool {
        self.attributes.get(q.attribute).is_some_and(|a| q.value < a.values.len())
    }

    pub fn describe(&self, q: Question) -> String {
        match self.attributes.get(q.attribute) {
            Some(a) => match a.values.get(q.value) {
                Some(v) => format!("{}={}", a.name, v),
                None => format!("{}=?{}", a.name, q.value),
            },
            None => format!("?{}={}", q.attribute, q.value),
        }
    }

    pub fn value_name(&self, attribute: usize, value: AttrValue) -> &str {
        match value {
            Some(v) => &self.attributes[attribute].values[v as usize],
            None => "UNDEFINED",
        }
    }

    pub fn n_questions(&self) -> usize {
        self.attributes.iter().map(|a| a.values.len()).sum()
    }
}

/// An attribute value index; `None` is UNDEFINED (the attribute does not apply).
pub type AttrValue = Option<u32>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: usize,
    /// One value per schema attribute, in schema order.
    pub values: Vec<AttrValue>,
}

/// Attribute-equality predicate, stored as indices into the schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Question {
    pub attribute: usize,
    pub value: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Answer {
    Yes,
    No,
    Na,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "YES",
            Answer::No => "NO",
            Answer::Na => "NA",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TargetRule {
    #[default]
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    pub schema: Arc<AttributeSchema>,
    pub objects: Vec<ObjectSpec>,
    pub target_id: usize,
    pub seed: u64,
}

impl GameInstance {
    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn target(&self) -> &ObjectSpec {
        &self.objects[self.target_id]
    }

    /// Checks every structural invariant of a game.
    pub fn validate(&self) -> Result<()> {
        let n = self.objects.len();
        if n < 2 {
            return Err(Error::Validation(format!("game needs at least 2 objects, got {n}")));
        }
        if self.target_id >= n {
            return Err(Error::Validation(format!("target {} out of range", self.target_id)));
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.id != i {
                return Err(Error::Validation(format!("object at position {i} has id {}", o.id)));
            }
            if o.values.len() != self.schema.len() {
                return Err(Error::Validation(format!(
                    "object {i} has {} values, schema has {}",
                    o.values.len(),
                    self.schema.len()
                )));
            }
            for (a, v) in o.values.iter().enumerate() {
                if let Some(v) = v {
                    if *v as usize >= self.schema.attributes()[a].values.len() {
                        return Err(Error::Validation(format!("object {i} attribute {a} value {v} out of range")));
                    }
                }
            }
        }
        if is_degenerate(&self.objects) {
            return Err(Error::Validation("all objects are identical".into()));
        }
        Ok(())
    }
}

fn is_degenerate(objects: &[ObjectSpec]) -> bool {
    objects.windows(2).all(|w| w[0].values == w[1].values)
}

/// Draws a random world: every attribute value uniform per object, target
/// uniform. Draws repeat until at least two objects differ.
pub fn generate_world(
    seed: u64,
    n_objects: usize,
    schema: &Arc<AttributeSchema>,
    target_rule: TargetRule,
) -> Result<GameInstance> {
    if n_objects < 2 {
        return Err(Error::Validation(format!("n_objects must be >= 2, got {n_objects}")));
    }
    if schema.is_empty() {
        return Err(Error::Validation("schema has no attributes".into()));
    }
    let mut rng = rng::rng_from_seed(seed);
    let objects = loop {
        let objects: Vec<ObjectSpec> = (0..n_objects)
            .map(|id| ObjectSpec {
                id,
                values: schema
                    .attributes()
                    .iter()
                    .map(|a| {
                        let n = a.values.len() as u32;
                        if a.optional {
                            let draw = rng.gen_range(0..=n);
                            (draw < n).then_some(draw)
                        } else {
                            Some(rng.gen_range(0..n))
                        }
                    })
                    .collect(),
            })
            .collect();
        if !is_degenerate(&objects) {
            break objects;
        }
    };
    let target_id = match target_rule {
        TargetRule::UniformRandom => rng.gen_range(0..n_objects),
    };
    Ok(GameInstance { schema: Arc::clone(schema), objects, target_id, seed })
}

pub const MAX_BITS: usize = 20;

pub fn bitworld_schema(n_bits: usize) -> Result<AttributeSchema> {
    if !(1..=MAX_BITS).contains(&n_bits) {
        return Err(Error::Validation(format!("n_bits must be in 1..={MAX_BITS}, got {n_bits}")));
    }
    AttributeSchema::new((0..n_bits).map(|i| Attribute::new(format!("bit_{i}"), &["0", "1"])).collect())
}

/// `2^n_bits` objects where object `j` carries the binary digits of `j`.
/// The target is drawn uniformly from `seed`.
pub fn make_bitworld(n_bits: usize, seed: u64) -> Result<GameInstance> {
    let schema = Arc::new(bitworld_schema(n_bits)?);
    let n = 1usize << n_bits;
    let mut rng = rng::derive_rng(seed, stream::BITWORLD_TARGET, 0);
    let target = rng.gen_range(0..n);
    bitworld_with_target(&schema, target, seed)
}

pub fn bitworld_with_target(schema: &Arc<AttributeSchema>, target_id: usize, seed: u64) -> Result<GameInstance> {
    let n_bits = schema.len();
    let n = 1usize << n_bits;
    if target_id >= n {
        return Err(Error::Validation(format!("target {target_id} out of range for {n} objects")));
    }
    let objects = (0..n)
        .map(|j| ObjectSpec { id: j, values: (0..n_bits).map(|i| Some(((j >> i) & 1) as u32)).collect() })
        .collect();
    Ok(GameInstance { schema: Arc::clone(schema), objects, target_id, seed })
}

/// One question per (attribute, value) pair, in schema order.
pub fn enumerate_questions(schema: &AttributeSchema) -> Vec<Question> {
    schema
        .attributes()
        .iter()
        .enumerate()
        .flat_map(|(a, attr)| (0..attr.values.len()).map(move |v| Question { attribute: a, value: v }))
        .collect()
}

/// What kind of world a run draws its games from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorldSpec {
    Random { n_objects: usize, schema: Arc<AttributeSchema> },
    Bitworld { n_bits: usize },
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec::Random { n_objects: 16, schema: Arc::new(AttributeSchema::default_experiment()) }
    }
}

impl WorldSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            WorldSpec::Random { n_objects, schema } => {
                if *n_objects < 2 {
                    return Err(Error::Validation(format!("n_objects must be >= 2, got {n_objects}")));
                }
                if schema.is_empty() {
                    return Err(Error::Validation("schema has no attributes".into()));
                }
                Ok(())
            }
            WorldSpec::Bitworld { n_bits } => bitworld_schema(*n_bits).map(|_| ()),
        }
    }

    pub fn build(&self, seed: u64) -> Result<GameInstance> {
        match self {
            WorldSpec::Random { n_objects, schema } => {
                generate_world(seed, *n_objects, schema, TargetRule::UniformRandom)
            }
            WorldSpec::Bitworld { n_bits } => make_bitworld(*n_bits, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn color_schema() -> Arc<AttributeSchema> {
        Arc::new(AttributeSchema::new(vec![Attribute::new("color", &["red", "blue"])]).unwrap())
    }

    #[test]
    fn two_object_world_shape() {
        let g = generate_world(0, 2, &color_schema(), TargetRule::UniformRandom).unwrap();
        assert_eq!(g.n_objects(), 2);
        assert!(g.target_id < 2);
        for o in &g.objects {
            assert!(matches!(o.values[0], Some(0) | Some(1)));
        }
        g.validate().unwrap();
    }

    #[test]
    fn generation_is_deterministic() {
        let s = Arc::new(AttributeSchema::default_experiment());
        let a = generate_world(42, 16, &s, TargetRule::UniformRandom).unwrap();
        let b = generate_world(42, 16, &s, TargetRule::UniformRandom).unwrap();
        assert_eq!(a, b);
        let c = generate_world(43, 16, &s, TargetRule::UniformRandom).unwrap();
        assert_ne!(a.objects, c.objects);
    }

    #[test]
    fn sixteen_objects_all_defined() {
        let s = Arc::new(AttributeSchema::default_experiment());
        let g = generate_world(7, 16, &s, TargetRule::UniformRandom).unwrap();
        g.validate().unwrap();
        assert_eq!(g.n_objects(), 16);
        assert!(g.objects.iter().all(|o| o.values.len() == 4 && o.values.iter().all(Option::is_some)));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(generate_world(0, 1, &color_schema(), TargetRule::UniformRandom).is_err());
        let empty = Arc::new(AttributeSchema::new(vec![]).unwrap());
        assert!(generate_world(0, 4, &empty, TargetRule::UniformRandom).is_err());
        assert!(AttributeSchema::new(vec![Attribute::new("a", &["x"])]).is_err());
        assert!(AttributeSchema::new(vec![Attribute::new("a", &["x", "x"])]).is_err());
        assert!(AttributeSchema::new(vec![Attribute::new("a", &["x", "y"]), Attribute::new("a", &["x", "y"])]).is_err());
    }

    #[test]
    fn optional_attributes_produce_undefined() {
        let s = Arc::new(AttributeSchema::new(vec![Attribute::new("size", &["big", "small"]).optional()]).unwrap());
        let g = generate_world(3, 200, &s, TargetRule::UniformRandom).unwrap();
        assert!(g.objects.iter().any(|o| o.values[0].is_none()));
        let d = Arc::new(AttributeSchema::default_experiment());
        let g = generate_world(3, 200, &d, TargetRule::UniformRandom).unwrap();
        assert!(g.objects.iter().all(|o| o.values.iter().all(Option::is_some)));
    }

    #[test]
    fn bitworld_one_bit() {
        let g = make_bitworld(1, 0).unwrap();
        assert_eq!(g.objects[0].values, vec![Some(0)]);
        assert_eq!(g.objects[1].values, vec![Some(1)]);
        g.validate().unwrap();
    }

    #[test]
    fn bitworld_three_bits_splits_evenly() {
        let g = make_bitworld(3, 0).unwrap();
        assert_eq!(g.n_objects(), 8);
        let q = g.schema.question("bit_2", "1").unwrap();
        let yes = g.objects.iter().filter(|o| o.values[q.attribute] == Some(q.value as u32)).count();
        assert_eq!(yes, 4);
    }

    #[test]
    fn bitworld_range_checked() {
        assert!(make_bitworld(0, 0).is_err());
        assert!(make_bitworld(21, 0).is_err());
    }

    #[test]
    fn bitworld_subcubes_split_in_half() {
        // Brute force: every sub-cube (fixed bits `mask` set to `pattern`) is halved
        // by every free-bit question.
        let b = 4;
        let g = make_bitworld(b, 0).unwrap();
        for mask in 0u32..(1 << b) {
            for pattern in 0u32..(1 << b) {
                if pattern & !mask != 0 {
                    continue;
                }
                let cube: Vec<&ObjectSpec> = g.objects.iter().filter(|o| (o.id as u32) & mask == pattern).collect();
                for bit in 0..b {
                    if mask & (1 << bit) != 0 {
                        continue;
                    }
                    let yes = cube.iter().filter(|o| (o.id >> bit) & 1 == 1).count();
                    let yes_by_attr = cube.iter().filter(|o| o.values[bit] == Some(1)).count();
                    assert_eq!(yes, yes_by_attr);
                    assert_eq!(2 * yes, cube.len());
                }
            }
        }
    }

    #[test]
    fn question_enumeration() {
        let s = AttributeSchema::new(vec![Attribute::new("color", &["red", "blue"])]).unwrap();
        let qs = enumerate_questions(&s);
        assert_eq!(qs, vec![Question { attribute: 0, value: 0 }, Question { attribute: 0, value: 1 }]);
        assert_eq!(s.describe(qs[1]), "color=blue");

        let bw = bitworld_schema(2).unwrap();
        assert_eq!(enumerate_questions(&bw).len(), 4);

        let s = AttributeSchema::new(vec![Attribute::new("a", &["x", "y", "z"]), Attribute::new("b", &["u", "v"])])
            .unwrap();
        let names: Vec<String> = enumerate_questions(&s).into_iter().map(|q| s.describe(q)).collect();
        assert_eq!(names, ["a=x", "a=y", "a=z", "b=u", "b=v"]);
        assert_eq!(s.n_questions(), 5);
    }

    #[test]
    fn schema_round_trips_through_json() {
        let s = AttributeSchema::default_experiment();
        let json = serde_json::to_string(&s).unwrap();
        let back: AttributeSchema = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
        assert!(serde_json::from_str::<AttributeSchema>(r#"[{"name":"a","values":["x"]}]"#).is_err());
    }
}
