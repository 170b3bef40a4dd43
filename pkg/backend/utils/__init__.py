# Utility package initialization