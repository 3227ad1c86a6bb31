"""Writes 20 Newsgroups in the layout the acceptance suite expects.

    python scripts/prepare_20newsgroups.py OUT_DIR

OUT_DIR/corpus.tsv holds one `label<TAB>text` line per document (train subset
first, then test) and OUT_DIR/train_split.txt lists the train indices.
Headers, footers and quotes are removed; text is lowercased and reduced to
alphabetic tokens.
"""

import argparse
import pathlib
import re

from sklearn.datasets import fetch_20newsgroups

TOKEN = re.compile(r"[a-z]+")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", type=pathlib.Path)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    remove = ("headers", "footers", "quotes")
    train = fetch_20newsgroups(subset="train", remove=remove)
    test = fetch_20newsgroups(subset="test", remove=remove)

    with open(args.out_dir / "corpus.tsv", "w", encoding="utf-8") as out:
        for subset in (train, test):
            for text, target in zip(subset.data, subset.target):
                tokens = TOKEN.findall(text.lower())
                out.write(f"{subset.target_names[target]}\t{' '.join(tokens)}\n")
    with open(args.out_dir / "train_split.txt", "w") as out:
        out.writelines(f"{i}\n" for i in range(len(train.data)))
    print(f"{len(train.data)} train + {len(test.data)} test documents -> {args.out_dir}")


if __name__ == "__main__":
    main()
