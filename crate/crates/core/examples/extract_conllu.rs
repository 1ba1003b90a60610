//! Extract subject and object instances from a small CoNLL-U snippet and show
//! the dependency patterns recorded for each.

use argconcept::extraction::{extract_instances, parse_conllu, ExtractionConfig, PosColumn};
use argconcept::taxonomy::{CoverageMode, Taxonomy};

const TEXT: &str = "\
# sent_id = 1
1\tThe\tthe\t_\tDT\t_\t2\tdet\t_\t_
2\tchild\tchild\t_\tNN\t_\t3\tnsubj\t_\t_
3\twatched\twatch\t_\tVBD\t_\t0\troot\t_\t_
4\tStar\tstar\t_\tNNP\t_\t5\tcompound\t_\t_
5\tWars\twars\t_\tNNP\t_\t3\tdobj\t_\t_
6\t.\t.\t_\t.\t_\t3\tpunct\t_\t_

# sent_id = 2
1\tThe\tthe\t_\tDT\t_\t2\tdet\t_\t_
2\tcorn\tcorn\t_\tNN\t_\t4\tnsubjpass\t_\t_
3\twas\tbe\t_\tVBD\t_\t4\tauxpass\t_\t_
4\teaten\teat\t_\tVBN\t_\t0\troot\t_\t_
5\tby\tby\t_\tIN\t_\t6\tcase\t_\t_
6\tdogs\tdog\t_\tNNS\t_\t4\tagent\t_\t_
";

fn main() {
    let taxonomy = Taxonomy::from_pairs(
        [("star wars", "film"), ("corn", "food"), ("dog", "animal"), ("child", "person")],
        CoverageMode::Direct,
    )
    .expect("non-empty taxonomy");
    let doc = parse_conllu(TEXT, PosColumn::Auto);
    let extraction = extract_instances(&doc.sentences, &taxonomy, &ExtractionConfig::default());
    println!("{:?}", extraction.stats);
    for r in extraction.records() {
        println!("{} {} {:?} x{}", r.verb, r.role, r.arg, r.count);
        for (pattern, n) in &r.patterns {
            println!("    {pattern}  {n}");
        }
    }
}
