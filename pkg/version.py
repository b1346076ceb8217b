"""
项目版本信息配置文件
这是唯一的版本信息源，所有其他脚本都应该从这里读取版本信息
"""

# 版本号
VERSION = "1.0.0"

# 项目元信息
YEAR = "2025"
AUTHOR = "pengcunfu"

# 项目信息
PRODUCT_NAME = "Spatial Copula Tool"
COMPANY_NAME = "PySpatialCopula"
DESCRIPTION = "Clayton Random Field Simulation and Pairwise Likelihood Estimation for Bounded Spatial Data"
REPO_URL = "https://github.com/pengcunfu/SpatialCopula"
