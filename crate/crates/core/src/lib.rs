pub mod expr;
pub mod poly;
pub mod qalg;
pub mod cone;
pub mod backtrack;
pub mod trace;
pub mod constraints;
pub mod assembler;
pub mod verifier;
pub mod frontend;

pub use assembler::{assemble, AssemblyOptions, Mode, QBinomialIdentity};
pub use cone::{ConeFrame, IntVector};
pub use constraints::{enumerate_regimes, ConstraintNode, Regime};
pub use expr::{AffineExpr, Assignment, QuadExpr, VarId, VarTable};
pub use frontend::{parse, InputDocument, OutputFormat, RunConfig};
pub use poly::QPolynomial;
pub use qalg::{BracketFraction, HypergeometricIdentity, QBinomial, SquareBracket, SumCoefficient};
pub use trace::{ProofStep, ProofTrace};
pub use verifier::{verify, VerificationReport};
