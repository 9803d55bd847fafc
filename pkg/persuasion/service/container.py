from functools import lru_cache

from persuasion.core.config import get_settings
from persuasion.service.platform_service import PersuasionPlatform


@lru_cache(maxsize=1)
def get_platform() -> PersuasionPlatform:
    settings = get_settings()
    return PersuasionPlatform(settings)
