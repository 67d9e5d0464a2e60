# Copyright 2026 The LSR Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Learned sparse retrieval: encoders, inverted index and evaluation."""

from lsr._core import (
    InvertedIndex,
    LsrError,
    SparseEncoder,
    Vocabulary,
    brute_force_search,
    flops_regularizer,
    gradient_suite,
    lambda_schedule,
    margin_mse,
    mrr_at_k,
    ndcg_at_k,
    read_qrels,
    recall_at_k,
    run_cli,
    sparse_dot,
    tokenize,
)

__all__ = [
    "InvertedIndex",
    "LsrError",
    "SparseEncoder",
    "Vocabulary",
    "brute_force_search",
    "flops_regularizer",
    "gradient_suite",
    "lambda_schedule",
    "margin_mse",
    "mrr_at_k",
    "ndcg_at_k",
    "read_qrels",
    "recall_at_k",
    "run_cli",
    "sparse_dot",
    "tokenize",
]
