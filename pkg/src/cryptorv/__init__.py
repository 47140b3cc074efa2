"""Cycle-approximate, bit-exact model of a RISC-V cryptographic co-processor.

Subpackages and modules:

* ``primitives`` -- golden-reference SHA-2, SM3, Keccak/SHA-3, AES-128, Haraka
* ``isa``        -- instruction set, encoder/decoder, assembler
* ``memsys``     -- data memory, internal buffer, DMA channel
* ``units``      -- timing/functional models of the three crypto engines
* ``core``       -- five-stage in-order pipeline interpreter
* ``scheduler``  -- double-buffered program generation and trace analysis
* ``bench``      -- reports and the command-line front end
"""

from cryptorv.modes import Algorithm, Engine

__all__ = ["Algorithm", "Engine"]
__version__ = "0.1.0"
