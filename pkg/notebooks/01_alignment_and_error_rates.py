# %% [markdown]
# # Alignment and error rates
#
# Word and character error rates come from one Levenshtein alignment of
# the normalized reference against a transcript. This walkthrough shows the
# normalization step, the alignment counts, and the delta between the
# transcript of the prompt audio and the transcript of the cloned audio.

# %%
import numpy as np

from dysfair.textmetrics import (
    NormalizationPolicy,
    align,
    character_error_rate,
    delta_metric,
    normalize_and_tokenize,
    word_error_rate,
)

# %% [markdown]
# ## Normalization
# Lowercase, strip punctuation (apostrophes inside words survive), collapse
# whitespace. Each step can be turned off.

# %%
raw = "The  quick, BROWN fox didn't jump!"
print(normalize_and_tokenize(raw))
print(NormalizationPolicy(lowercase=False).apply(raw))

# %% [markdown]
# ## Alignment counts
# Ties between equally cheap paths go to the diagonal, so a swapped pair
# counts as two substitutions rather than a deletion plus an insertion.

# %%
ref = "the cat sat on the mat".split()
hyp = "the cat sat on mat today".split()
counts = align(ref, hyp)
print(counts, "errors:", counts.errors)
print("WER:", counts.errors / counts.ref_len)

# %% [markdown]
# ## Prompt vs generated transcripts
# A dysarthric prompt is hard to transcribe; a clone that sounds more
# fluent is easier. A positive delta means the clone "cleaned up" the voice.

# %%
reference = "please call stella ask her to bring these things with her from the store"
prompt_asr = "please call stella ask to bring the thing with from store"
generated_asr = "please call stella ask her to bring these things with her from the store"

wer_p, wer_g = word_error_rate(reference, prompt_asr), word_error_rate(reference, generated_asr)
cer_p, cer_g = character_error_rate(reference, prompt_asr), character_error_rate(reference, generated_asr)
print(f"dWER = {wer_p:.3f} - {wer_g:.3f} = {delta_metric(wer_p, wer_g):.3f}")
print(f"dCER = {cer_p:.3f} - {cer_g:.3f} = {delta_metric(cer_p, cer_g):.3f}")

# %% [markdown]
# ## Scaling
# The dynamic program runs one numpy row at a time, so a 1000-character
# pair aligns quickly.

# %%
rng = np.random.default_rng(0)
long_ref = list(rng.choice(list("abcdefgh "), 1000))
long_hyp = list(long_ref)
for i in rng.choice(1000, 80, replace=False):
    long_hyp[i] = "z"
print(align(long_ref, long_hyp))
