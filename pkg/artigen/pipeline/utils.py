import os
import platform
from typing import Any, Dict

import psutil


def get_system_info() -> Dict[str, Any]:
    """Host facts recorded next to reports and shown by selfcheck"""
    memory = psutil.virtual_memory()
    return {
        "os": f"{platform.system()} {platform.release()}",
        "python": platform.python_version(),
        "machine": platform.machine(),
        "cpu_count": psutil.cpu_count(logical=True),
        "memory_gb": round(memory.total / (1024 ** 3), 1),
        "available_gb": round(memory.available / (1024 ** 3), 1),
        "log_dir": os.environ.get('ARTIGEN_LOG_DIR', 'logs'),
    }


def format_system_info(info: Dict[str, Any]) -> str:
    return f"""System Information:
- OS: {info['os']}
- Python: {info['python']}
- CPU Architecture: {info['machine']} ({info['cpu_count']} cores)
- Memory: {info['memory_gb']:.1f}GB total, {info['available_gb']:.1f}GB available"""
