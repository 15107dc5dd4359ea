"""Builds the miniature text/image model bundle used by the neural backend tests.

The bundle has the same layout and tensor names as a real exported
checkpoint, but the weights are hand-set: an image embeds as its mean
normalized color, and a handful of words embed as the color they name
or evoke. Everything else embeds near the origin.
"""

import json
import sys
from pathlib import Path

import torch
from tokenizers import Regex, Tokenizer, decoders, models, normalizers, pre_tokenizers, processors, trainers

MEAN = [0.48145466, 0.4578275, 0.40821073]
STD = [0.26862954, 0.26130258, 0.27577711]
COLORS = {
    "red": (255, 0, 0),
    "orange": (255, 165, 0),
    "yellow": (255, 255, 0),
    "green": (0, 128, 0),
    "cyan": (0, 255, 255),
    "blue": (0, 0, 255),
    "purple": (128, 0, 128),
    "magenta": (255, 0, 255),
    "pink": (255, 192, 203),
    "brown": (139, 69, 19),
}
WORDS = {"leaf": "green", "apple": "red", "lemon": "yellow", "raindrop": "cyan", "heart": "magenta"}
DIM = 8


def color_embedding(rgb):
    v = [(c / 255.0 - m) / s for c, m, s in zip(rgb, MEAN, STD)]
    return v + [0.0] * (DIM - 3)


def build_tokenizer():
    tok = Tokenizer(models.BPE(end_of_word_suffix="</w>", continuing_subword_prefix="", unk_token=None))
    tok.normalizer = normalizers.Sequence(
        [normalizers.NFC(), normalizers.Replace(Regex(r"\s+"), " "), normalizers.Lowercase()]
    )
    tok.pre_tokenizer = pre_tokenizers.Sequence(
        [
            pre_tokenizers.Split(
                Regex(r"""'s|'t|'re|'ve|'m|'ll|'d|[\p{L}]+|[\p{N}]|[^\s\p{L}\p{N}]+"""),
                behavior="removed",
                invert=True,
            ),
            pre_tokenizers.ByteLevel(add_prefix_space=False),
        ]
    )
    tok.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=600,
        special_tokens=["<|startoftext|>", "<|endoftext|>"],
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
        end_of_word_suffix="</w>",
        show_progress=False,
    )
    corpus = [f"A {c} {w} shape" for c in COLORS for w in list(WORDS) + ["star", "cat"]] * 20
    tok.train_from_iterator(corpus, trainer)
    bos, eos = tok.token_to_id("<|startoftext|>"), tok.token_to_id("<|endoftext|>")
    tok.post_processor = processors.TemplateProcessing(
        single="<|startoftext|> $A <|endoftext|>",
        special_tokens=[("<|startoftext|>", bos), ("<|endoftext|>", eos)],
    )
    return tok


class Textual(torch.nn.Module):
    def __init__(self, table):
        super().__init__()
        self.table = torch.nn.Parameter(table, requires_grad=False)

    def forward(self, input_ids):
        emb = self.table[input_ids]
        mask = (input_ids > 1).to(emb.dtype).unsqueeze(-1)
        return (emb * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)


class Visual(torch.nn.Module):
    def forward(self, pixel_values):
        mean = pixel_values.mean(dim=(2, 3))
        pad = torch.zeros(mean.shape[0], DIM - 3, dtype=mean.dtype)
        return torch.cat([mean, pad], dim=1)


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    tok = build_tokenizer()
    tok.save(str(out / "tokenizer.json"))
    vocab = tok.get_vocab()
    table = torch.full((len(vocab), DIM), 0.01)
    table[:, 3] = 0.05
    for word, color in list(WORDS.items()) + [(c, c) for c in COLORS]:
        ids = tok.encode(word, add_special_tokens=False).ids
        assert len(ids) == 1, (word, ids)
        table[ids[0]] = torch.tensor(color_embedding(COLORS[color]))
    ids = torch.zeros(1, 77, dtype=torch.int64)
    torch.onnx.export(
        Textual(table), (ids,), str(out / "textual.onnx"),
        input_names=["input_ids"], output_names=["text_embeds"], opset_version=17, dynamo=False,
    )
    px = torch.zeros(1, 3, 224, 224)
    torch.onnx.export(
        Visual(), (px,), str(out / "visual.onnx"),
        input_names=["pixel_values"], output_names=["image_embeds"], opset_version=17, dynamo=False,
    )
    json.dump({w: WORDS[w] for w in WORDS}, open(out / "expected_colors.json", "w"), indent=1, sort_keys=True)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/swarmshape/tests/fixtures/tiny_clip")
