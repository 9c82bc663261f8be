import numpy as np
import pytest

from pami import (
    ConstantScorer,
    KeywordScorer,
    ScoringError,
    TokenSequence,
    explain_tokens,
    partition_tokens,
)


class TestPartitionTokens:
    def test_simple_split(self):
        assert partition_tokens("good movie").tokens == ("good", "movie")

    def test_punctuation_stays_attached(self):
        assert partition_tokens("I love it!").tokens == ("I", "love", "it!")

    def test_whitespace_collapsed(self):
        assert partition_tokens("  a  ").tokens == ("a",)

    @pytest.mark.parametrize("text", ["", "   ", "\n\t"])
    def test_blank_text_rejected(self, text):
        with pytest.raises(ValueError):
            partition_tokens(text)


class TestTokenSequence:
    def test_masked_variant(self):
        seq = TokenSequence(("I", "love", "it!"), mask_token="_")
        assert seq.masked_variant(1) == "_ love _"

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            TokenSequence(())
        with pytest.raises(ValueError):
            TokenSequence(("a",), mask_token="")


class TestExplainTokens:
    def test_constant_scorer_uniform_importance(self):
        seq = partition_tokens("one two three")
        out = explain_tokens(seq, ConstantScorer(0.35), 0)
        assert out == [0.35, 0.35, 0.35]

    def test_single_token_scores_original(self):
        seq = partition_tokens("love")
        scorer = KeywordScorer("love")
        out = explain_tokens(seq, scorer, 0)
        assert out == [float(scorer.score_text("love").scores[0])] == [0.9]

    def test_keyword_scorer_isolates_keyword(self):
        seq = partition_tokens("I love it!")
        out = explain_tokens(seq, KeywordScorer("love"), 0)
        assert out == [0.1, 0.9, 0.1]

    def test_output_length_and_range(self, rng):
        words = ["w%d" % i for i in range(12)]
        seq = partition_tokens(" ".join(words))
        out = explain_tokens(seq, KeywordScorer("w3"), 0)
        assert len(out) == 12
        assert all(0.0 <= v <= 1.0 for v in out)

    def test_bag_of_words_permutation_equivariance(self, rng):
        tokens = ("alpha", "beta", "gamma", "delta")
        scorer = KeywordScorer("gamma")
        base = explain_tokens(TokenSequence(tokens), scorer, 0)
        order = rng.permutation(4)
        permuted = explain_tokens(
            TokenSequence(tuple(tokens[i] for i in order)), scorer, 0)
        assert permuted == [base[i] for i in order]

    def test_scoring_error_carries_token_index(self):
        class Bomb(KeywordScorer):
            def __init__(self):
                super().__init__("x")
                self.calls = 0

            def score_text(self, text):
                self.calls += 1
                if self.calls == 2:
                    raise ScoringError("boom")
                return super().score_text(text)

        seq = partition_tokens("a b c")
        with pytest.raises(ScoringError) as info:
            explain_tokens(seq, Bomb(), 0)
        assert info.value.context["token_index"] == 1
        assert info.value.context["token"] == "b"

    def test_class_out_of_range(self):
        seq = partition_tokens("a b")
        with pytest.raises(ValueError, match="out of range"):
            explain_tokens(seq, KeywordScorer("a"), 4)
