//! Writes planted low-rank ratings in Movielens `u.data` format.
//!
//! ```text
//! cargo run --example write_synthetic_ratings -- out/u.data [users] [items] [seed]
//! ```

use selfrank::data_io::write_movielens;
use selfrank::evaluation::gen_synthetic_ratings;

fn main() -> selfrank::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().map(String::as_str).unwrap_or("u.data");
    let arg =
        |i: usize, default: usize| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (users, items, seed) = (arg(1, 943), arg(2, 200), arg(3, 0) as u64);
    let table = gen_synthetic_ratings(users, items, 3, seed);
    if let Some(dir) = std::path::Path::new(path).parent() {
        std::fs::create_dir_all(dir).map_err(|e| selfrank::Error::Io {
            path: dir.into(),
            source: e,
        })?;
    }
    write_movielens(&table, path)?;
    println!(
        "{} ratings from {users} users on {items} items -> {path}",
        table.len()
    );
    Ok(())
}
