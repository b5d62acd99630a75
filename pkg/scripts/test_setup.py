#!/usr/bin/env python
"""Smoke check that the environment can build, run and account a grafted model."""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

CONFIG_DIR = Path(__file__).parent.parent / "configs"


def test_config():
    """Test settings and the shipped run configs."""
    print("🔍 Testing configuration...")
    try:
        from src.config import settings
        from src.harness.config_loader import load_config

        print(f"  ✓ Settings loaded (log level {settings.log_level})")
        for path in sorted(CONFIG_DIR.glob("*.conf")):
            config = load_config(path)
            print(f"  ✓ {path.name}: {config.spec.kind}, {len(config.spec.grafts)} grafts")
        return True

    except Exception as e:
        print(f"  ✗ Error: {e}")
        return False


def test_forward():
    """Test a grafted forward pass and its zero-gain transparency."""
    print("\n🔍 Testing forward pass...")
    try:
        import numpy as np

        from src.harness.config_loader import load_config
        from src.nn.backbone import build_model_params, model_forward
        from src.tensor import no_grad, precision

        config = load_config(CONFIG_DIR / "homogeneous_toy.conf")
        spec = config.spec
        images = np.random.default_rng(0).normal(size=(2, spec.image_size, spec.image_size, 3))
        with precision("verify64"), no_grad():
            grafted = build_model_params(spec, seed=0)
            plain = build_model_params(spec.without_grafts(), seed=0)
            logits = model_forward(images, grafted)
            silent = model_forward(images, grafted, graft_gain=0.0)
            reference = model_forward(images, plain)

        print(f"  ✓ Logits shape {logits.shape}")
        if not np.array_equal(silent.data, reference.data):
            print("  ✗ Zero-gain graft changed the output")
            return False
        print("  ✓ Zero-gain graft is transparent")
        return True

    except Exception as e:
        print(f"  ✗ Error: {e}")
        return False


def test_cost():
    """Test the golden block count."""
    print("\n🔍 Testing cost accounting...")
    try:
        from src.cost import window_block_macs

        macs = window_block_macs(56, 56, 96, 7)
        if macs != 376_320_000:
            print(f"  ✗ Block MACs {macs:,}, expected 376,320,000")
            return False
        print(f"  ✓ 56x56x96 block with 7x7 windows: {macs:,} MACs")
        return True

    except Exception as e:
        print(f"  ✗ Error: {e}")
        return False


def main():
    """Run all checks."""
    print("=" * 60)
    print("Graft Toy - Environment Setup Test")
    print("=" * 60)

    results = [test_config(), test_forward(), test_cost()]

    # Summary
    print("\n" + "=" * 60)
    print("Summary")
    print("=" * 60)

    if all(results):
        print("✅ All checks passed! Your environment is ready.")
        print("\nNext steps:")
        print("  1. graft-toy check invariants configs/homogeneous_toy.conf")
        print("  2. graft-toy train configs/homogeneous_toy.conf")
    else:
        print("❌ Some checks failed. Please fix the issues above.")
        sys.exit(1)


if __name__ == "__main__":
    main()
