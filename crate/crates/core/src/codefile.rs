//! JSON code files: `{"kappa": κ, "n": n, "columns": [int, ...]}`.
//!
//! Each integer is a column in the `ν` convention (bit `j` is row `j`).
//! `n` is optional on input, as in seed-matrix files; when present it must
//! match the number of columns.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::GeneratorMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeFile {
    pub kappa: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub columns: Vec<u32>,
}

impl CodeFile {
    pub fn from_generator(g: &GeneratorMatrix) -> Self {
        Self {
            kappa: g.kappa(),
            n: Some(g.n()),
            columns: g.words().collect(),
        }
    }

    pub fn to_generator(&self) -> Result<GeneratorMatrix> {
        if let Some(n) = self.n {
            if n != self.columns.len() {
                return Err(Error::Invalid(format!(
                    "code file declares n = {n} but lists {} columns",
                    self.columns.len()
                )));
            }
        }
        GeneratorMatrix::from_words(self.kappa, &self.columns)
    }
}

pub fn parse_code(text: &str) -> Result<GeneratorMatrix> {
    let file: CodeFile = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("code file: {e}")))?;
    file.to_generator()
}

pub fn code_to_json(g: &GeneratorMatrix) -> String {
    serde_json::to_string(&CodeFile::from_generator(g)).expect("plain struct serializes")
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn read_code(path: impl AsRef<Path>) -> Result<GeneratorMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_code(&text)
}

pub fn write_code(path: impl AsRef<Path>, g: &GeneratorMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut text = code_to_json(g);
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}
