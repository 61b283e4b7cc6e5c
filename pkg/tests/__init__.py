# Switch Lab 测试包
# Switch Lab Test Package
