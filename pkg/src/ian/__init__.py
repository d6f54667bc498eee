"""Aspect-level sentiment classification with interacting attention encoders.

Pure-numpy implementation: two LSTM encoders (context and target), mutual
attention pooling between them, a softmax classifier on the joined
representation, and a hand-derived backward pass trained with momentum SGD.
"""

__version__ = "0.1.0"
