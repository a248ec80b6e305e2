"""
Classification metrics, prediction files and paired significance testing.
"""
