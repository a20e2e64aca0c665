# -*- coding: utf-8 -*-
from .ply_scene_adapter import PlySceneAdapter
from .camera_file_adapter import CameraFileAdapter
from .mask_image_adapter import MaskImageAdapter
from .image_file_adapter import ImageFileAdapter
from .stats_file_adapter import StatsFileAdapter
