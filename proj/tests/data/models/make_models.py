# Copyright 2026 The kstone Authors.
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

"""Regenerates the tiny ONNX models used by the backend tests.

detector_tiny.onnx:   input (1,3,640,640) -> output (1,5,3), constant rows
                      (the input only feeds through a zero-weight Gemm).
classifier_tiny.onnx: input (1,3,224,224) -> output (1,1),
                      logit = 2*mean(R) - 1*mean(G) + 0.5*mean(B) + 0.25
"""
import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper


def save(graph, path):
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 11)])
    model.ir_version = 6
    onnx.checker.check_model(model)
    onnx.save(model, path)


def detector():
    # columns: (cx, cy, w, h, score) in letterbox space
    rows = np.array([
        [320.0, 320.0, 100.0, 100.0, 0.90],
        [322.0, 321.0, 100.0, 100.0, 0.80],  # duplicate of row 0, suppressed by NMS
        [100.0, 200.0, 50.0, 80.0, 0.10],    # below confidence threshold
    ], dtype=np.float32)
    bias = rows.T.reshape(-1).astype(np.float32)  # channel-major (5, N)
    n_out = bias.size
    nodes = [
        helper.make_node("GlobalAveragePool", ["images"], ["pooled"]),
        helper.make_node("Flatten", ["pooled"], ["flat"], axis=1),
        helper.make_node("Gemm", ["flat", "W", "B"], ["dense"], transB=1),
        helper.make_node("Reshape", ["dense", "shape"], ["output0"]),
    ]
    inits = [
        numpy_helper.from_array(np.zeros((n_out, 3), np.float32), "W"),
        numpy_helper.from_array(bias, "B"),
        numpy_helper.from_array(np.array([1, 5, rows.shape[0]], np.int64), "shape"),
    ]
    graph = helper.make_graph(
        nodes, "detector_tiny",
        [helper.make_tensor_value_info("images", TensorProto.FLOAT, [1, 3, 640, 640])],
        [helper.make_tensor_value_info("output0", TensorProto.FLOAT, [1, 5, rows.shape[0]])],
        inits)
    save(graph, "detector_tiny.onnx")


def classifier():
    nodes = [
        helper.make_node("GlobalAveragePool", ["input"], ["pooled"]),
        helper.make_node("Flatten", ["pooled"], ["flat"], axis=1),
        helper.make_node("Gemm", ["flat", "W", "B"], ["logit"], transB=1),
    ]
    inits = [
        numpy_helper.from_array(np.array([[2.0, -1.0, 0.5]], np.float32), "W"),
        numpy_helper.from_array(np.array([0.25], np.float32), "B"),
    ]
    graph = helper.make_graph(
        nodes, "classifier_tiny",
        [helper.make_tensor_value_info("input", TensorProto.FLOAT, [1, 3, 224, 224])],
        [helper.make_tensor_value_info("logit", TensorProto.FLOAT, [1, 1])],
        inits)
    save(graph, "classifier_tiny.onnx")


if __name__ == "__main__":
    detector()
    classifier()
