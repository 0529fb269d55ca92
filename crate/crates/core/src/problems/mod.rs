//! Instance families: the analytic toy problem, over-parameterized
//! regression, fair classification, dictionary learning, random polytope
//! instances and CSV ingestion.

pub mod data;
pub mod dictionary;
pub mod fair;
pub mod random;
pub mod regression;
pub mod toy;

pub use data::{load_csv, read_csv, split_dataset, Dataset, DatasetSplit, DEFAULT_FRACTIONS};
pub use dictionary::{dictionary_problem, DictLearnSpec, DictionaryProblem};
pub use fair::{fair_classification_problem, fair_synthetic, FairProblem, FairSpec};
pub use random::{random_polytope_instance, LowerKind, RandomSpec};
pub use regression::{regression_problem, regression_synthetic, RegressionProblem, RegressionSpec};
pub use toy::toy_problem;
