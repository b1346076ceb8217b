#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Spatial Copula Tool - 命令行入口
Clayton 随机场模拟、复合似然拟合与诊断数据输出
"""

import sys
import os
import logging

from app.config_manager import CONFIG_FILE, create_default_config

# 配置日志
os.makedirs('logs', exist_ok=True)
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler('logs/spatial_copula.log', encoding='utf-8'),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger(__name__)


def main():
    """主函数 - 命令行"""
    try:
        # 确保配置文件存在
        if not os.path.exists(CONFIG_FILE):
            create_default_config()
            logger.info("已创建默认配置文件")

        from app.cli import run
        return run(sys.argv[1:])

    except ImportError as e:
        error_msg = f"导入模块失败: {str(e)}"
        logger.error(error_msg, exc_info=True)
        print(f"模块导入错误: {e}")
        return 1

    except Exception as e:
        error_msg = f"运行失败: {str(e)}"
        logger.error(error_msg, exc_info=True)
        print(f"运行失败: {e}")
        return 1


if __name__ == '__main__':
    sys.exit(main())
