//! Bundled reproduction recipes.

use crate::report::{allocation_table, allocation_table_markdown, complexity_table, complexity_table_markdown};
use crate::sweep::json_bytes;
use crate::{CliError, VERSION};
use std::fs;
use std::path::Path;

/// `(figure id, config text)`.
pub const FIGURES: [(&str, &str); 14] = [
    ("fig2", include_str!("../configs/fig2.toml")),
    ("fig3", include_str!("../configs/fig3.toml")),
    ("fig4", include_str!("../configs/fig4.toml")),
    ("fig5", include_str!("../configs/fig5.toml")),
    ("fig6", include_str!("../configs/fig6.toml")),
    ("fig7", include_str!("../configs/fig7.toml")),
    ("fig8", include_str!("../configs/fig8.toml")),
    ("fig9", include_str!("../configs/fig9.toml")),
    ("fig10", include_str!("../configs/fig10.toml")),
    ("fig11", include_str!("../configs/fig11.toml")),
    ("fig12", include_str!("../configs/fig12.toml")),
    ("fig13", include_str!("../configs/fig13.toml")),
    ("fig14", include_str!("../configs/fig14.toml")),
    ("fig15", include_str!("../configs/fig15.toml")),
];

pub const TABLES: [&str; 2] = ["table1", "table3"];

pub fn figure_config(id: &str) -> Option<&'static str> {
    FIGURES.iter().find(|(f, _)| *f == id).map(|(_, c)| *c)
}

pub fn ids() -> Vec<&'static str> {
    FIGURES.iter().map(|(f, _)| *f).chain(TABLES).collect()
}

/// Writes `<id>.md` and `<id>.json` for a table recipe and returns the
/// markdown.
pub fn reproduce_table(id: &str, out_dir: &Path) -> Result<String, CliError> {
    #[derive(serde::Serialize)]
    struct TableFile<T> {
        version: &'static str,
        rows: T,
    }
    let (md, json) = match id {
        "table1" => {
            let rows = allocation_table()?;
            (allocation_table_markdown(&rows), json_bytes(&TableFile { version: VERSION, rows })?)
        }
        "table3" => {
            let rows = complexity_table()?;
            (complexity_table_markdown(&rows), json_bytes(&TableFile { version: VERSION, rows })?)
        }
        _ => return Err(CliError::Usage(format!("unknown table {id:?}"))),
    };
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let md_path = out_dir.join(format!("{id}.md"));
    fs::write(&md_path, format!("<!-- {VERSION} -->\n{md}")).map_err(|e| CliError::io(&md_path, e))?;
    let json_path = out_dir.join(format!("{id}.json"));
    fs::write(&json_path, json).map_err(|e| CliError::io(&json_path, e))?;
    Ok(md)
}
