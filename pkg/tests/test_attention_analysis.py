import os
import sys

sys.path.insert(1, os.path.join(sys.path[0], ".."))

import numpy
import torch

from heed.evaluation.attention import attention_overlay
from heed.evaluation.attention import color_swap_pair
from heed.evaluation.attention import evaluate_teacher
from heed.evaluation.attention import mask_cells
from heed.evaluation.attention import target_attention_mass
from heed.evaluation.attention import teacher_panel
from heed.training.teacher_training import build_teacher
from tests.tiny import tiny_config
from tests.tiny import tiny_dataset


def test_mask_cells_and_mass():
    mask = numpy.zeros((8, 8), dtype=bool)
    mask[5, 1] = True
    cells = mask_cells(mask, 2)
    assert cells.tolist() == [False, False, True, False]
    p = numpy.array([0.1, 0.2, 0.6, 0.1])
    assert abs(target_attention_mass(p, mask, 2) - 0.6) < 1e-12
    assert target_attention_mass(p, numpy.zeros((8, 8), dtype=bool), 2) == 0.0


def test_overlay_scales_cells():
    frame = numpy.ones((4, 4, 3), dtype=numpy.float32)
    overlay = attention_overlay(frame, numpy.array([0.5, 0.25, 0.25, 0.0]), 2)
    assert overlay.dtype == numpy.float32
    assert overlay[0, 0, 0] == 1.0
    assert overlay[0, 3, 0] == 0.5
    assert overlay[3, 3, 0] == 0.0


def test_teacher_report_ranges(tmp_path):
    config = tiny_config()
    handle = tiny_dataset(tmp_path)
    torch.manual_seed(0)
    teacher = build_teacher(config, handle.vocabulary.size)
    report = evaluate_teacher(teacher, handle)
    (index,) = handle.split("validation")
    assert report.frames == handle.demos[index]["length"]
    assert 0.0 <= report.target_mass <= 1.0
    assert 0.0 <= report.word_accuracy <= 1.0
    assert report.swap_pairs == 1
    assert report.color_swap in (0.0, 1.0)
    assert set(report.to_dict()) == {"frames", "target_mass", "word_accuracy", "swap_pairs", "color_swap"}


def test_color_swap_pairs_differ_only_in_colour(tmp_path):
    handle = tiny_dataset(tmp_path)
    colors = handle.catalog.colors
    for index in range(len(handle)):
        frame, original, swapped = color_swap_pair(handle, index)
        assert original.shape_id == swapped.shape_id == handle.command(index).shape_id
        assert original.color_id == handle.command(index).color_id
        assert swapped.color_id != original.color_id
        assert len(original.text) == len(swapped.text)
        changed = [(a, b) for a, b in zip(original.text, swapped.text) if a != b]
        assert changed == [(colors[original.color_id], colors[swapped.color_id])]
        assert frame.masks[0].any() and frame.masks[1].any()


def test_teacher_panel(tmp_path):
    config = tiny_config()
    handle = tiny_dataset(tmp_path)
    teacher = build_teacher(config, handle.vocabulary.size)
    teacher.eval()
    panel = teacher_panel(teacher, handle, 0, columns=3)
    assert panel.shape == (64, 96, 3)


if __name__ == "__main__":  # pragma: no cover
    from tests import run_tests

    run_tests()
