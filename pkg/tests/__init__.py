"""测试模块

包含演化能力仿真工具包的所有测试。
"""
