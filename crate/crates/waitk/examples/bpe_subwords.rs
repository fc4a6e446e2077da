//! Learn a joint byte-pair vocabulary, inspect the merges, and round-trip
//! text through the token ids.
//!
//!     cargo run --example bpe_subwords

use waitk::data::SubwordModel;

fn main() {
    let corpus = [
        "the streaming reader reads the sentence",
        "the reader never rereads a read token",
        "a sentence streams token by token",
    ];
    let model = SubwordModel::learn(&corpus, 30).unwrap();

    println!("learned {} merge rules, first ten:", model.merge_rules().len());
    for (a, b) in model.merge_rules().iter().take(10) {
        println!("  {a} + {b} -> {a}{b}");
    }
    println!("vocabulary: {} tokens\n", model.vocab_size());

    let line = "the reader reads a sentence";
    let ids = model.encode(line);
    let pieces: Vec<&str> = ids.iter().map(|&i| model.token(i)).collect();
    println!("text:    {line}");
    println!("pieces:  {pieces:?}");
    println!("ids:     {ids:?}");
    let back = model.decode(&ids);
    println!("decoded: {back}");
    assert_eq!(back, line, "round trip is lossless over the training alphabet");

    // Unknown characters degrade to <unk>; tag specials pass through whole.
    println!("\nwith tag and an unseen character:");
    let tagged = "<BT> the reader reads 툥";
    let ids = model.encode(tagged);
    println!("decoded: {}", model.decode(&ids));
}
