"""
Utils package for the WMMS Allocation Toolkit
"""
