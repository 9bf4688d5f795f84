use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// Output directory of one run. Files are written to a temporary name and
/// renamed into place; a manifest listing every file closes the run.
pub struct Outputs {
    dir: PathBuf,
    scenario: String,
    config_hash: String,
    seed: u64,
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: &Path, scenario: &str, config_hash: &str, seed: u64) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            scenario: scenario.into(),
            config_hash: config_hash.into(),
            seed,
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        self.files
            .push((name.to_owned(), hex::encode(Sha256::digest(bytes))));
        Ok(target)
    }

    /// Writes `<scenario>_manifest.toml`.
    pub fn finish(mut self) -> std::io::Result<PathBuf> {
        let mut m = String::new();
        m.push_str(&format!("scenario = \"{}\"\n", self.scenario));
        m.push_str(&format!("config_sha256 = \"{}\"\n", self.config_hash));
        m.push_str(&format!("seed = {}\n", self.seed));
        for (name, hash) in &self.files {
            m.push_str(&format!(
                "\n[[files]]\nname = \"{name}\"\nsha256 = \"{hash}\"\n"
            ));
        }
        let name = format!("{}_manifest.toml", self.scenario);
        let path = self.write(&name, m.as_bytes())?;
        self.files.pop();
        Ok(path)
    }
}
