//! Byte parity of a small parallel corpus and the parity-weighted language mix.
//!
//! cargo run --example parity

use tokescale::multilingual::{estimate_parity, inflate_english_x2, mix_weights, parse_parallel_tsv, with_inflated};

const CORPUS: &str = "\
1\teng\tThe cat sleeps.
1\tdeu\tDie Katze schläft.
1\trus\tКошка спит.
1\thin\tबिल्ली सो रही है।
2\teng\tIt rained all day.
2\tdeu\tEs hat den ganzen Tag geregnet.
2\trus\tВесь день шёл дождь.
2\thin\tपूरे दिन बारिश हुई।
";

fn main() -> tokescale::Result<()> {
    let parallel = with_inflated(&parse_parallel_tsv(CORPUS.as_bytes())?, "eng");
    let parity = estimate_parity(&parallel, "eng")?;
    let weights = mix_weights(&parity)?;
    println!("language  parity  weight");
    for (lang, p) in &parity.entries {
        println!("{lang:<8}  {p:>6.3}  {:>6.3}", weights[lang]);
    }
    let inflated = inflate_english_x2("abc".as_bytes());
    println!("\n\"abc\" inflated: {inflated:?}");
    Ok(())
}
