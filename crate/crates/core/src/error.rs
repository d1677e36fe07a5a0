use thiserror::Error;

use crate::field_io::FieldError;
use crate::fracture::FractureError;
use crate::material::MaterialError;
use crate::mesh::MeshError;
use crate::solver::SolverError;

/// Any engine failure, tagged with the module that raised it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Fracture(#[from] FractureError),
    #[error("{0}")]
    Study(String),
    #[error("{0}")]
    Io(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Field(e) => e.kind(),
            Error::Material(e) => e.kind(),
            Error::Mesh(e) => e.kind(),
            Error::Solver(e) => e.kind(),
            Error::Fracture(e) => e.kind(),
            Error::Study(_) => "StudyError",
            Error::Io(_) => "IoError",
        }
    }

    pub fn module(&self) -> &'static str {
        match self {
            Error::Field(FieldError::Io(_)) | Error::Io(_) => "io",
            Error::Field(_) => "field_io",
            Error::Material(_) => "material",
            Error::Mesh(_) => "mesh",
            Error::Solver(_) => "solver",
            Error::Fracture(FractureError::Solver(_)) => "solver",
            Error::Fracture(_) => "fracture",
            Error::Study(_) => "studies",
        }
    }

    pub fn is_io(&self) -> bool {
        self.module() == "io"
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
