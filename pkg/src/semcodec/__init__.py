"""Segmentation-map codec: boundary loops, delta coding and PPM, packed
next to a backbone image codec in a two-stream container."""

from .adapters import BackboneAdapter, Down2xAdapter, ExternalAdapter, NullAdapter, default_registry, register_external_adapter
from .boundary import Path, PathSet, extract_paths, rasterize, smooth_paths
from .container import ContainerFile, bpp, compress, decompress
from .delta import delta_decode, delta_encode
from .metrics import MetricReport, evaluate, ms_ssim, mse, psnr
from .ppm import Bitstream, ppm_compress, ppm_decompress
from .segmap import Region, RegionSet, RgbImage, SegMap, connected_components, gen_voronoi, new_segmap, render_rgb
from .semantics import decode_semantics, encode_semantics

__version__ = "0.1.0"
