//! Rule-based answerer. Reports whether an object carries the queried
//! attribute value, optionally flipping YES/NO with a fixed probability.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{Answer, GameInstance, ObjectSpec, Question};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { noise_rate: 0.0, seed: 0 }
    }
}

impl OracleConfig {
    pub fn truthful() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(Error::Validation(format!("noise_rate must be in [0,1], got {}", self.noise_rate)));
        }
        Ok(())
    }

    pub fn is_truthful(&self) -> bool {
        self.noise_rate == 0.0
    }
}

/// The noise-free answer.
#[inline]
pub fn truthful_answer(question: Question, object: &ObjectSpec) -> Result<Answer> {
    match object.values.get(question.attribute) {
        None => Err(Error::SchemaMismatch { attribute: question.attribute, available: object.values.len() }),
        Some(None) => Ok(Answer::Na),
        Some(Some(v)) if *v as usize == question.value => Ok(Answer::Yes),
        Some(Some(_)) => Ok(Answer::No),
    }
}

/// Answers `question` about `object`. The rng is only consumed when noise is
/// non-zero and the true answer is YES or NO.
pub fn answer<R: Rng + ?Sized>(
    question: Question,
    object: &ObjectSpec,
    config: &OracleConfig,
    rng: &mut R,
) -> Result<Answer> {
    let truth = truthful_answer(question, object)?;
    if config.noise_rate <= 0.0 || truth == Answer::Na {
        return Ok(truth);
    }
    if rng.gen_bool(config.noise_rate.min(1.0)) {
        Ok(match truth {
            Answer::Yes => Answer::No,
            Answer::No => Answer::Yes,
            Answer::Na => Answer::Na,
        })
    } else {
        Ok(truth)
    }
}

pub fn answer_for_target<R: Rng + ?Sized>(
    question: Question,
    game: &GameInstance,
    config: &OracleConfig,
    rng: &mut R,
) -> Result<Answer> {
    answer(question, game.target(), config, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::world::{make_bitworld, Attribute, AttributeSchema};

    fn obj(values: Vec<Option<u32>>) -> ObjectSpec {
        ObjectSpec { id: 0, values }
    }

    #[test]
    fn definition_cases() {
        let s = AttributeSchema::new(vec![
            Attribute::new("color", &["red", "blue"]),
            Attribute::new("size", &["big", "small"]).optional(),
        ])
        .unwrap();
        let red = s.question("color", "red").unwrap();
        let big = s.question("size", "big").unwrap();
        let cfg = OracleConfig::truthful();
        let mut rng = rng_from_seed(0);
        assert_eq!(answer(red, &obj(vec![Some(0), Some(0)]), &cfg, &mut rng).unwrap(), Answer::Yes);
        assert_eq!(answer(red, &obj(vec![Some(1), Some(0)]), &cfg, &mut rng).unwrap(), Answer::No);
        assert_eq!(answer(big, &obj(vec![Some(1), None]), &cfg, &mut rng).unwrap(), Answer::Na);
    }

    #[test]
    fn missing_attribute_is_schema_mismatch() {
        let q = Question { attribute: 3, value: 0 };
        let err = answer(q, &obj(vec![Some(0)]), &OracleConfig::truthful(), &mut rng_from_seed(0));
        assert!(matches!(err, Err(Error::SchemaMismatch { attribute: 3, available: 1 })));
    }

    #[test]
    fn bitworld_target_answers() {
        let mut g = make_bitworld(3, 0).unwrap();
        g.target_id = 5;
        let cfg = OracleConfig::truthful();
        let mut rng = rng_from_seed(1);
        let bit0 = g.schema.question("bit_0", "1").unwrap();
        let bit1 = g.schema.question("bit_1", "1").unwrap();
        assert_eq!(answer_for_target(bit0, &g, &cfg, &mut rng).unwrap(), Answer::Yes);
        assert_eq!(answer_for_target(bit1, &g, &cfg, &mut rng).unwrap(), Answer::No);
    }

    #[test]
    fn full_noise_flips_yes_and_no_but_never_na() {
        let cfg = OracleConfig { noise_rate: 1.0, seed: 0 };
        let mut rng = rng_from_seed(2);
        let q = Question { attribute: 0, value: 0 };
        assert_eq!(answer(q, &obj(vec![Some(0)]), &cfg, &mut rng).unwrap(), Answer::No);
        assert_eq!(answer(q, &obj(vec![Some(1)]), &cfg, &mut rng).unwrap(), Answer::Yes);
        assert_eq!(answer(q, &obj(vec![None]), &cfg, &mut rng).unwrap(), Answer::Na);
    }

    #[test]
    fn exactly_one_value_answers_yes() {
        let g = make_bitworld(4, 9).unwrap();
        let cfg = OracleConfig::truthful();
        let mut rng = rng_from_seed(0);
        for o in &g.objects {
            for (a, attr) in g.schema.attributes().iter().enumerate() {
                let yes = (0..attr.values.len())
                    .filter(|&v| answer(Question { attribute: a, value: v }, o, &cfg, &mut rng).unwrap() == Answer::Yes)
                    .count();
                assert_eq!(yes, 1);
            }
        }
    }

    #[test]
    fn noise_rate_validated() {
        assert!(OracleConfig { noise_rate: 1.5, seed: 0 }.validate().is_err());
        assert!(OracleConfig { noise_rate: -0.1, seed: 0 }.validate().is_err());
        assert!(OracleConfig { noise_rate: 0.3, seed: 0 }.validate().is_ok());
    }
}
